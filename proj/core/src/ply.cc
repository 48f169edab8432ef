#include "pointscene/ply.h"

#include <cstring>
#include <sstream>
#include <string>
#include <unordered_map>

#include "pointscene/error.h"
#include "pointscene/io.h"

namespace pointscene {
namespace {

enum class PlyType { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

PlyType ParseType(const std::string& name) {
  static const std::unordered_map<std::string, PlyType> kTypes = {
      {"char", PlyType::kInt8},     {"int8", PlyType::kInt8},
      {"uchar", PlyType::kUInt8},   {"uint8", PlyType::kUInt8},
      {"short", PlyType::kInt16},   {"int16", PlyType::kInt16},
      {"ushort", PlyType::kUInt16}, {"uint16", PlyType::kUInt16},
      {"int", PlyType::kInt32},     {"int32", PlyType::kInt32},
      {"uint", PlyType::kUInt32},   {"uint32", PlyType::kUInt32},
      {"float", PlyType::kFloat32}, {"float32", PlyType::kFloat32},
      {"double", PlyType::kFloat64}, {"float64", PlyType::kFloat64}};
  const auto it = kTypes.find(name);
  PS_CHECK(it != kTypes.end(), ErrorCode::kIo, "ply: unsupported type " + name);
  return it->second;
}

size_t TypeSize(PlyType t) {
  switch (t) {
    case PlyType::kInt8:
    case PlyType::kUInt8:
      return 1;
    case PlyType::kInt16:
    case PlyType::kUInt16:
      return 2;
    case PlyType::kInt32:
    case PlyType::kUInt32:
    case PlyType::kFloat32:
      return 4;
    case PlyType::kFloat64:
      return 8;
  }
  return 0;
}

template <typename T>
T Load(const uint8_t* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

double ReadBinary(PlyType t, const uint8_t* p) {
  switch (t) {
    case PlyType::kInt8:
      return Load<int8_t>(p);
    case PlyType::kUInt8:
      return Load<uint8_t>(p);
    case PlyType::kInt16:
      return Load<int16_t>(p);
    case PlyType::kUInt16:
      return Load<uint16_t>(p);
    case PlyType::kInt32:
      return Load<int32_t>(p);
    case PlyType::kUInt32:
      return Load<uint32_t>(p);
    case PlyType::kFloat32:
      return Load<float>(p);
    case PlyType::kFloat64:
      return Load<double>(p);
  }
  return 0.0;
}

template <typename T>
void Append(std::vector<uint8_t>& out, T value) {
  const size_t at = out.size();
  out.resize(at + sizeof(T));
  std::memcpy(out.data() + at, &value, sizeof(T));
}

struct Property {
  std::string name;
  PlyType type;
};

}  // namespace

void WritePly(const fs::path& path, const ScenePointCloud& cloud,
              const PlyWriteOptions& options) {
  std::vector<size_t> rows;
  rows.reserve(cloud.size());
  for (size_t i = 0; i < cloud.size(); ++i) {
    if (!options.only_alive || cloud.alive[i]) rows.push_back(i);
  }
  const bool binary = options.format == PlyFormat::kBinaryLittleEndian;
  std::ostringstream header;
  header << "ply\n"
         << "format " << (binary ? "binary_little_endian" : "ascii")
         << " 1.0\n";
  if (options.include_provenance && !cloud.view_ids.empty()) {
    header << "comment views";
    for (const auto& id : cloud.view_ids) header << ' ' << id;
    header << '\n';
  }
  header << "element vertex " << rows.size() << '\n'
         << "property float x\nproperty float y\nproperty float z\n"
         << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
         << "property int instance_id\n";
  if (options.include_provenance) {
    header << "property int view\nproperty int u\nproperty int v\n"
           << "property uchar alive\n";
  }
  header << "end_header\n";
  const std::string head = header.str();
  std::vector<uint8_t> out(head.begin(), head.end());

  for (size_t i : rows) {
    const Eigen::Vector3f p = cloud.positions[i].cast<float>();
    const Rgb8& c = cloud.colors[i];
    const PointSource& s = cloud.sources[i];
    if (binary) {
      Append(out, p.x());
      Append(out, p.y());
      Append(out, p.z());
      out.insert(out.end(), c.begin(), c.end());
      Append(out, cloud.instance_id[i]);
      if (options.include_provenance) {
        Append(out, s.view);
        Append(out, s.u);
        Append(out, s.v);
        Append(out, cloud.alive[i]);
      }
    } else {
      std::ostringstream line;
      line.precision(9);
      line << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << int(c[0]) << ' '
           << int(c[1]) << ' ' << int(c[2]) << ' ' << cloud.instance_id[i];
      if (options.include_provenance) {
        line << ' ' << s.view << ' ' << s.u << ' ' << s.v << ' '
             << int(cloud.alive[i]);
      }
      line << '\n';
      const std::string text = line.str();
      out.insert(out.end(), text.begin(), text.end());
    }
  }
  WriteBytes(path, out);
}

ScenePointCloud ReadPly(const fs::path& path) {
  const std::vector<uint8_t> bytes = ReadBytes(path);
  const std::string marker = "end_header\n";
  const auto end_it = std::search(bytes.begin(), bytes.end(), marker.begin(),
                                  marker.end());
  PS_CHECK(end_it != bytes.end(), ErrorCode::kIo,
           "ply: no end_header in " + path.string());
  const size_t body_offset = (end_it - bytes.begin()) + marker.size();
  std::istringstream header(std::string(bytes.begin(), end_it));

  ScenePointCloud cloud;
  std::vector<Property> props;
  size_t count = 0;
  bool binary = false;
  bool in_vertex = false;
  std::string line;
  std::getline(header, line);
  PS_CHECK(line == "ply", ErrorCode::kIo, "ply: bad magic");
  while (std::getline(header, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "format") {
      std::string fmt;
      ls >> fmt;
      PS_CHECK(fmt == "ascii" || fmt == "binary_little_endian", ErrorCode::kIo,
               "ply: unsupported format " + fmt);
      binary = fmt != "ascii";
    } else if (key == "comment") {
      std::string tag;
      ls >> tag;
      if (tag == "views") {
        std::string id;
        while (ls >> id) cloud.view_ids.push_back(id);
      }
    } else if (key == "element") {
      std::string name;
      ls >> name;
      in_vertex = name == "vertex";
      PS_CHECK(in_vertex, ErrorCode::kIo,
               "ply: only a vertex element is supported");
      ls >> count;
    } else if (key == "property" && in_vertex) {
      std::string type, name;
      ls >> type;
      PS_CHECK(type != "list", ErrorCode::kIo, "ply: list properties unsupported");
      ls >> name;
      props.push_back({name, ParseType(type)});
    }
  }

  std::unordered_map<std::string, size_t> column;
  size_t stride = 0;
  for (size_t k = 0; k < props.size(); ++k) {
    column[props[k].name] = k;
    stride += TypeSize(props[k].type);
  }
  for (const char* required : {"x", "y", "z"}) {
    PS_CHECK(column.count(required), ErrorCode::kIo,
             std::string("ply: missing property ") + required);
  }

  std::vector<double> values(props.size());
  const auto get = [&](const char* name, double fallback) {
    const auto it = column.find(name);
    return it == column.end() ? fallback : values[it->second];
  };
  cloud.Reserve(count);
  std::istringstream ascii;
  if (!binary) {
    ascii.str(std::string(bytes.begin() + body_offset, bytes.end()));
  }
  PS_CHECK(!binary || bytes.size() >= body_offset + count * stride,
           ErrorCode::kIo, "ply: truncated body");
  for (size_t i = 0; i < count; ++i) {
    if (binary) {
      const uint8_t* p = bytes.data() + body_offset + i * stride;
      for (const Property& prop : props) {
        values[&prop - props.data()] = ReadBinary(prop.type, p);
        p += TypeSize(prop.type);
      }
    } else {
      for (size_t k = 0; k < props.size(); ++k) {
        double& v = values[k];
        PS_CHECK(static_cast<bool>(ascii >> v), ErrorCode::kIo,
                 "ply: truncated ascii body");
        if (props[k].type == PlyType::kFloat32) v = static_cast<float>(v);
      }
    }
    cloud.PushBack(
        {get("x", 0), get("y", 0), get("z", 0)},
        {static_cast<uint8_t>(get("red", 0)),
         static_cast<uint8_t>(get("green", 0)),
         static_cast<uint8_t>(get("blue", 0))},
        {static_cast<int32_t>(get("view", 0)),
         static_cast<int32_t>(get("u", static_cast<double>(i))),
         static_cast<int32_t>(get("v", 0))},
        static_cast<int32_t>(get("instance_id", kUnlabeled)),
        get("alive", 1) != 0);
  }
  return cloud;
}

}  // namespace pointscene
