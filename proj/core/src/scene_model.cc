#include "pointscene/scene_model.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "pointscene/error.h"
#include "pointscene/io.h"
#include "pointscene/parallel.h"

namespace pointscene {

void ViewFrame::Validate() const {
  intrinsics.Validate(view_id);
  pose.Validate(view_id);
  const int w = intrinsics.width;
  const int h = intrinsics.height;
  PS_CHECK(rgb.SameShape(w, h) && rgb.channels() == 3,
           ErrorCode::kShapeMismatch, view_id + "/rgb");
  PS_CHECK(depth.SameShape(w, h) && depth.channels() == 1,
           ErrorCode::kShapeMismatch, view_id + "/depth");
  for (float z : depth.data()) {
    PS_CHECK(std::isfinite(z) && z >= 0.0f, ErrorCode::kInvalidArgument,
             view_id + "/depth: non-finite or negative sample");
  }
  if (masks) {
    PS_CHECK(masks->labels.SameShape(w, h), ErrorCode::kShapeMismatch,
             view_id + "/masks");
    for (int32_t l : masks->labels.data()) {
      PS_CHECK(l >= 0, ErrorCode::kInvalidArgument,
               view_id + "/masks: negative label");
    }
  }
}

size_t ScenePointCloud::NumAlive() const {
  return static_cast<size_t>(std::count(alive.begin(), alive.end(), 1));
}

void ScenePointCloud::Reserve(size_t n) {
  positions.reserve(n);
  colors.reserve(n);
  sources.reserve(n);
  instance_id.reserve(n);
  alive.reserve(n);
}

void ScenePointCloud::PushBack(const Eigen::Vector3d& position,
                               const Rgb8& color, const PointSource& source,
                               int32_t instance, bool is_alive) {
  positions.push_back(position);
  colors.push_back(color);
  sources.push_back(source);
  instance_id.push_back(instance);
  alive.push_back(is_alive ? 1 : 0);
}

void ScenePointCloud::PushFrom(const ScenePointCloud& other, size_t index) {
  PushBack(other.positions[index], other.colors[index], other.sources[index],
           other.instance_id[index], other.alive[index] != 0);
}

int ScenePointCloud::ViewIndex(const std::string& view_id) const {
  const auto it = std::find(view_ids.begin(), view_ids.end(), view_id);
  return it == view_ids.end() ? -1 : static_cast<int>(it - view_ids.begin());
}

void ScenePointCloud::CheckInvariants() const {
  const size_t n = positions.size();
  PS_CHECK(colors.size() == n && sources.size() == n &&
               instance_id.size() == n && alive.size() == n,
           ErrorCode::kLengthMismatch, "point cloud arrays differ in length");
  std::set<PointSource> seen;
  for (size_t i = 0; i < n; ++i) {
    PS_CHECK(instance_id[i] >= kUnlabeled, ErrorCode::kInvalidArgument,
             "instance id below -1");
    const PointSource& s = sources[i];
    PS_CHECK(s.view >= 0 && s.view < static_cast<int>(view_ids.size()),
             ErrorCode::kSourceMismatch, "source view out of range");
    PS_CHECK(seen.insert(s).second, ErrorCode::kSourceMismatch,
             "duplicate source pixel");
  }
}

int SceneBundle::IndexOf(const std::string& view_id) const {
  for (size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].view_id == view_id) return static_cast<int>(i);
  }
  return -1;
}

std::vector<std::string> SceneBundle::ViewIds() const {
  std::vector<std::string> ids;
  ids.reserve(frames.size());
  for (const auto& f : frames) ids.push_back(f.view_id);
  return ids;
}

namespace {

ViewFrame LoadViewFrame(const fs::path& dir, const std::string& view_id) {
  const fs::path view_dir = dir / "views" / view_id;
  const auto require = [&](const char* name, const char* tag) {
    const fs::path p = view_dir / name;
    PS_CHECK(fs::exists(p), ErrorCode::kMissingFile, view_id + "/" + tag);
    return p;
  };
  const fs::path rgb_path = require("rgb.png", "rgb");
  const fs::path depth_path = require("depth.f32", "depth");
  const fs::path camera_path = require("camera.json", "camera");

  ViewFrame frame;
  frame.view_id = view_id;
  const Camera camera = CameraFromJson(ReadJson(camera_path), view_id);
  frame.intrinsics = camera.intrinsics;
  frame.pose = camera.pose;
  frame.rgb = ReadPngRgb(rgb_path);
  frame.depth = ReadDepthF32(depth_path);
  const fs::path masks_path = view_dir / "masks.png";
  if (fs::exists(masks_path)) {
    frame.masks = InstanceMask2D{view_id, ReadPngLabels16(masks_path)};
  }
  frame.Validate();
  return frame;
}

}  // namespace

SceneBundle LoadSceneBundle(const fs::path& dir) {
  PS_CHECK(fs::exists(dir / "scene.json"), ErrorCode::kMissingFile,
           "scene.json");
  const nlohmann::json scene = ReadJson(dir / "scene.json");
  SceneBundle bundle;
  std::vector<std::string> ids;
  try {
    bundle.metadata.scene_id = scene.at("scene_id").get<std::string>();
    bundle.metadata.units = scene.value("units", "meters");
    bundle.metadata.convention =
        scene.value("convention", bundle.metadata.convention);
    ids = scene.at("views").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("scene.json: ") + e.what());
  }
  PS_CHECK(bundle.metadata.units == "meters", ErrorCode::kInvalidArgument,
           "scene.json: units must be meters");
  std::sort(ids.begin(), ids.end());
  PS_CHECK(std::adjacent_find(ids.begin(), ids.end()) == ids.end(),
           ErrorCode::kInvalidArgument, "scene.json: duplicate view id");
  PS_CHECK(ids.size() >= 2, ErrorCode::kTooFewViews,
           "a bundle needs at least 2 views");
  bundle.frames.resize(ids.size());
  ParallelFor(ids.size(),
              [&](size_t i) { bundle.frames[i] = LoadViewFrame(dir, ids[i]); });
  return bundle;
}

void WriteSceneBundle(const fs::path& dir, const SceneBundle& bundle) {
  nlohmann::json scene = {{"scene_id", bundle.metadata.scene_id},
                          {"units", bundle.metadata.units},
                          {"convention", bundle.metadata.convention},
                          {"views", bundle.ViewIds()}};
  WriteJson(dir / "scene.json", scene);
  for (const ViewFrame& frame : bundle.frames) {
    const fs::path view_dir = dir / "views" / frame.view_id;
    fs::create_directories(view_dir);
    WritePngRgb(view_dir / "rgb.png", frame.rgb);
    WriteDepthF32(view_dir / "depth.f32", frame.depth);
    WriteJson(view_dir / "camera.json", CameraToJson(frame.camera()));
    if (frame.masks) {
      WritePngLabels16(view_dir / "masks.png", frame.masks->labels);
    }
  }
}

PointMap Unproject(const ViewFrame& frame) {
  const CameraIntrinsics& k = frame.intrinsics;
  PointMap map;
  map.width = k.width;
  map.height = k.height;
  map.points.assign(frame.depth.num_pixels(),
                    Eigen::Vector3d::Constant(
                        std::numeric_limits<double>::quiet_NaN()));
  map.valid = MakeMask(k.width, k.height);
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const double z = frame.depth.at(u, v);
      if (z > 0.0) {
        map.points[static_cast<size_t>(v) * k.width + u] =
            UnprojectPixel(k, frame.pose, u, v, z);
        map.valid.at(u, v) = 1;
      }
    }
  }
  return map;
}

std::vector<PointMap> UnprojectAll(std::span<const ViewFrame> frames) {
  std::vector<PointMap> maps(frames.size());
  ParallelFor(frames.size(), [&](size_t i) { maps[i] = Unproject(frames[i]); });
  return maps;
}

ScenePointCloud AssemblePointCloud(std::span<const PointMap> pointmaps,
                                   std::span<const ViewFrame> frames) {
  PS_CHECK(pointmaps.size() == frames.size(), ErrorCode::kLengthMismatch,
           "pointmaps and frames differ in count");
  ScenePointCloud cloud;
  size_t total = 0;
  for (size_t i = 0; i < pointmaps.size(); ++i) {
    PS_CHECK(pointmaps[i].valid.SameShape(frames[i].width(),
                                          frames[i].height()),
             ErrorCode::kShapeMismatch, frames[i].view_id);
    total += pointmaps[i].NumValid();
    cloud.view_ids.push_back(frames[i].view_id);
  }
  cloud.Reserve(total);
  for (size_t i = 0; i < pointmaps.size(); ++i) {
    const PointMap& map = pointmaps[i];
    const RgbImage& rgb = frames[i].rgb;
    for (int v = 0; v < map.height; ++v) {
      for (int u = 0; u < map.width; ++u) {
        if (!map.valid.at(u, v)) continue;
        cloud.PushBack(map.at(u, v),
                       {rgb.at(u, v, 0), rgb.at(u, v, 1), rgb.at(u, v, 2)},
                       {static_cast<int32_t>(i), u, v});
      }
    }
  }
  return cloud;
}

Image<int64_t> SourceIndexImage(const ScenePointCloud& cloud, int view,
                                int width, int height) {
  Image<int64_t> index(width, height, 1, -1);
  for (size_t i = 0; i < cloud.size(); ++i) {
    const PointSource& s = cloud.sources[i];
    if (s.view == view && index.InBounds(s.u, s.v)) {
      index.at(s.u, s.v) = static_cast<int64_t>(i);
    }
  }
  return index;
}

}  // namespace pointscene
