#include "pointscene/io.h"

#include <png.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "pointscene/error.h"

namespace pointscene {
namespace {

static_assert(std::endian::native == std::endian::little,
              "raw grid I/O assumes a little-endian host");

struct PngReadBuffer {
  const std::vector<uint8_t>* bytes;
  size_t offset = 0;
};

void PngReadCallback(png_structp png, png_bytep out, png_size_t length) {
  auto* buf = static_cast<PngReadBuffer*>(png_get_io_ptr(png));
  if (buf->offset + length > buf->bytes->size()) {
    png_error(png, "truncated png");
  }
  std::memcpy(out, buf->bytes->data() + buf->offset, length);
  buf->offset += length;
}

void PngWriteCallback(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void PngFlushCallback(png_structp) {}

void PngErrorCallback(png_structp, png_const_charp msg) {
  throw Error(ErrorCode::kIo, std::string("png: ") + msg);
}

void PngWarningCallback(png_structp, png_const_charp) {}

struct DecodedPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 8;
  std::vector<uint16_t> samples;  // widened to 16 bits when needed
};

DecodedPng DecodePng(const std::vector<uint8_t>& bytes,
                     const std::string& what) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw Error(ErrorCode::kIo, "not a png: " + what);
  }
  png_structp png = png_create_read_struct(
      PNG_LIBPNG_VER_STRING, nullptr, PngErrorCallback, PngWarningCallback);
  png_infop info = png_create_info_struct(png);
  DecodedPng out;
  try {
    PngReadBuffer buf{&bytes, 0};
    png_set_read_fn(png, &buf, PngReadCallback);
    png_read_info(png, info);
    const int color_type = png_get_color_type(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) {
      png_set_palette_to_rgb(png);
      bit_depth = 8;
    }
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
      png_set_expand_gray_1_2_4_to_8(png);
      bit_depth = 8;
    }
    if (png_get_valid(png, info, PNG_INFO_tRNS)) {
      png_set_tRNS_to_alpha(png);
    }
    if (bit_depth == 16) {
      png_set_swap(png);  // host order
    }
    png_read_update_info(png, info);
    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = png_get_channels(png, info);
    out.bit_depth = png_get_bit_depth(png, info);
    const size_t row_bytes = png_get_rowbytes(png, info);
    std::vector<uint8_t> pixels(row_bytes * out.height);
    std::vector<png_bytep> rows(out.height);
    for (int y = 0; y < out.height; ++y) {
      rows[y] = pixels.data() + y * row_bytes;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);

    const size_t n = static_cast<size_t>(out.width) * out.height * out.channels;
    out.samples.resize(n);
    if (out.bit_depth == 16) {
      for (int y = 0; y < out.height; ++y) {
        const auto* row = reinterpret_cast<const uint16_t*>(rows[y]);
        std::copy(row, row + static_cast<size_t>(out.width) * out.channels,
                  out.samples.begin() +
                      static_cast<size_t>(y) * out.width * out.channels);
      }
    } else {
      for (int y = 0; y < out.height; ++y) {
        std::copy(rows[y],
                  rows[y] + static_cast<size_t>(out.width) * out.channels,
                  out.samples.begin() +
                      static_cast<size_t>(y) * out.width * out.channels);
      }
    }
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

std::vector<uint8_t> EncodePng(int width, int height, int channels,
                               int bit_depth, const void* samples) {
  png_structp png = png_create_write_struct(
      PNG_LIBPNG_VER_STRING, nullptr, PngErrorCallback, PngWarningCallback);
  png_infop info = png_create_info_struct(png);
  std::vector<uint8_t> out;
  try {
    png_set_write_fn(png, &out, PngWriteCallback, PngFlushCallback);
    const int color_type =
        channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
    png_set_IHDR(png, info, width, height, bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_set_filter(png, 0, PNG_FILTER_SUB);
    png_write_info(png, info);
    if (bit_depth == 16) {
      png_set_swap(png);
    }
    const size_t row_bytes =
        static_cast<size_t>(width) * channels * (bit_depth / 8);
    const auto* base = static_cast<const uint8_t*>(samples);
    for (int y = 0; y < height; ++y) {
      png_write_row(png, const_cast<png_bytep>(base + y * row_bytes));
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

void WriteGrid(const fs::path& path, const char* magic, int width, int height,
               const void* samples, size_t sample_bytes) {
  std::vector<uint8_t> bytes(16 + static_cast<size_t>(width) * height *
                                      sample_bytes);
  std::memcpy(bytes.data(), magic, 4);
  const std::array<uint32_t, 3> dims = {static_cast<uint32_t>(width),
                                        static_cast<uint32_t>(height), 0u};
  std::memcpy(bytes.data() + 4, dims.data(), 12);
  std::memcpy(bytes.data() + 16, samples, bytes.size() - 16);
  WriteBytes(path, bytes);
}

template <typename T>
Image<T> ReadGrid(const fs::path& path, const char* magic) {
  const std::vector<uint8_t> bytes = ReadBytes(path);
  PS_CHECK(bytes.size() >= 16 && std::memcmp(bytes.data(), magic, 4) == 0,
           ErrorCode::kIo, "bad header in " + path.string());
  std::array<uint32_t, 3> dims{};
  std::memcpy(dims.data(), bytes.data() + 4, 12);
  const size_t expected =
      16 + static_cast<size_t>(dims[0]) * dims[1] * sizeof(T);
  PS_CHECK(dims[0] > 0 && dims[1] > 0 && bytes.size() == expected,
           ErrorCode::kIo, "bad size in " + path.string());
  Image<T> image(static_cast<int>(dims[0]), static_cast<int>(dims[1]));
  std::memcpy(image.raw().data(), bytes.data() + 16, expected - 16);
  return image;
}

}  // namespace

std::vector<uint8_t> ReadBytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  PS_CHECK(in.good(), ErrorCode::kMissingFile, path.string());
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void WriteBytes(const fs::path& path, const std::vector<uint8_t>& bytes) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  PS_CHECK(out.good(), ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  PS_CHECK(out.good(), ErrorCode::kIo, "write failed " + path.string());
}

RgbImage DecodePngRgb(const std::vector<uint8_t>& bytes) {
  const DecodedPng png = DecodePng(bytes, "buffer");
  RgbImage image = MakeRgb(png.width, png.height);
  const int shift = png.bit_depth == 16 ? 8 : 0;
  for (int y = 0; y < png.height; ++y) {
    for (int x = 0; x < png.width; ++x) {
      const size_t base =
          (static_cast<size_t>(y) * png.width + x) * png.channels;
      for (int c = 0; c < 3; ++c) {
        // Gray (+alpha) replicates the first channel.
        const int src = png.channels >= 3 ? c : 0;
        image.at(x, y, c) =
            static_cast<uint8_t>(png.samples[base + src] >> shift);
      }
    }
  }
  return image;
}

RgbImage ReadPngRgb(const fs::path& path) {
  const std::vector<uint8_t> bytes = ReadBytes(path);
  try {
    return DecodePngRgb(bytes);
  } catch (const Error& e) {
    throw Error(ErrorCode::kIo, path.string() + ": " + e.detail());
  }
}

BoolMask ReadPngMask(const fs::path& path) {
  const DecodedPng png = DecodePng(ReadBytes(path), path.string());
  BoolMask mask = MakeMask(png.width, png.height);
  for (int y = 0; y < png.height; ++y) {
    for (int x = 0; x < png.width; ++x) {
      mask.at(x, y) =
          png.samples[(static_cast<size_t>(y) * png.width + x) * png.channels] !=
          0;
    }
  }
  return mask;
}

LabelImage ReadPngLabels16(const fs::path& path) {
  const DecodedPng png = DecodePng(ReadBytes(path), path.string());
  LabelImage labels(png.width, png.height);
  for (int y = 0; y < png.height; ++y) {
    for (int x = 0; x < png.width; ++x) {
      labels.at(x, y) =
          png.samples[(static_cast<size_t>(y) * png.width + x) * png.channels];
    }
  }
  return labels;
}

std::vector<uint8_t> EncodePngRgb(const RgbImage& image) {
  PS_CHECK(image.channels() == 3, ErrorCode::kInvalidArgument,
           "rgb image must have 3 channels");
  return EncodePng(image.width(), image.height(), 3, 8, image.raw().data());
}

void WritePngRgb(const fs::path& path, const RgbImage& image) {
  WriteBytes(path, EncodePngRgb(image));
}

std::vector<uint8_t> EncodePngMask(const BoolMask& mask) {
  std::vector<uint8_t> gray(mask.num_pixels());
  for (size_t i = 0; i < gray.size(); ++i) {
    gray[i] = mask.raw()[i] ? 255 : 0;
  }
  return EncodePng(mask.width(), mask.height(), 1, 8, gray.data());
}

void WritePngMask(const fs::path& path, const BoolMask& mask) {
  WriteBytes(path, EncodePngMask(mask));
}

void WritePngLabels16(const fs::path& path, const LabelImage& labels) {
  std::vector<uint16_t> samples(labels.num_pixels());
  for (size_t i = 0; i < samples.size(); ++i) {
    const int32_t v = labels.raw()[i];
    PS_CHECK(v >= 0 && v <= 65535, ErrorCode::kInvalidArgument,
             "label out of 16-bit range");
    samples[i] = static_cast<uint16_t>(v);
  }
  WriteBytes(path,
             EncodePng(labels.width(), labels.height(), 1, 16, samples.data()));
}

DepthImage ReadDepthF32(const fs::path& path) {
  return ReadGrid<float>(path, kDepthMagic);
}

void WriteDepthF32(const fs::path& path, const DepthImage& depth) {
  WriteGrid(path, kDepthMagic, depth.width(), depth.height(),
            depth.raw().data(), sizeof(float));
}

LabelImage ReadInstanceI32(const fs::path& path) {
  return ReadGrid<int32_t>(path, kInstanceMagic);
}

void WriteInstanceI32(const fs::path& path, const LabelImage& labels) {
  WriteGrid(path, kInstanceMagic, labels.width(), labels.height(),
            labels.raw().data(), sizeof(int32_t));
}

nlohmann::json ReadJson(const fs::path& path) {
  const std::vector<uint8_t> bytes = ReadBytes(path);
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kIo, path.string() + ": " + e.what());
  }
}

void WriteJson(const fs::path& path, const nlohmann::json& value) {
  const std::string text = value.dump(2) + "\n";
  WriteBytes(path, std::vector<uint8_t>(text.begin(), text.end()));
}

nlohmann::json CameraToJson(const Camera& camera) {
  const CameraIntrinsics& k = camera.intrinsics;
  nlohmann::json rotation = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      rotation.push_back(camera.pose.rotation(r, c));
    }
  }
  const Eigen::Vector3d& t = camera.pose.translation;
  return {{"fx", k.fx},       {"fy", k.fy},
          {"cx", k.cx},       {"cy", k.cy},
          {"width", k.width}, {"height", k.height},
          {"rotation", rotation},
          {"translation", {t.x(), t.y(), t.z()}}};
}

Camera CameraFromJson(const nlohmann::json& j, const std::string& who) {
  Camera camera;
  try {
    camera.intrinsics.fx = j.at("fx").get<double>();
    camera.intrinsics.fy = j.at("fy").get<double>();
    camera.intrinsics.cx = j.at("cx").get<double>();
    camera.intrinsics.cy = j.at("cy").get<double>();
    camera.intrinsics.width = j.at("width").get<int>();
    camera.intrinsics.height = j.at("height").get<int>();
    const auto& rot = j.at("rotation");
    const auto& trans = j.at("translation");
    PS_CHECK(rot.size() == 9 && trans.size() == 3, ErrorCode::kBadCamera, who);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        camera.pose.rotation(r, c) = rot.at(r * 3 + c).get<double>();
      }
      camera.pose.translation(r) = trans.at(r).get<double>();
    }
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kBadCamera, who);
  }
  camera.intrinsics.Validate(who);
  camera.pose.Validate(who);
  return camera;
}

}  // namespace pointscene
