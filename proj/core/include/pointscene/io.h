#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pointscene/camera.h"
#include "pointscene/image.h"

namespace pointscene {

namespace fs = std::filesystem;

// PNG codec. The encoder uses fixed settings so identical pixels always
// produce identical bytes.
RgbImage ReadPngRgb(const fs::path& path);
BoolMask ReadPngMask(const fs::path& path);  // any nonzero sample -> 1
// 16-bit (or 8-bit) single-channel label image.
LabelImage ReadPngLabels16(const fs::path& path);

void WritePngRgb(const fs::path& path, const RgbImage& image);
// Writes 0/255 8-bit gray.
void WritePngMask(const fs::path& path, const BoolMask& mask);
// Labels must fit in [0, 65535].
void WritePngLabels16(const fs::path& path, const LabelImage& labels);

std::vector<uint8_t> EncodePngRgb(const RgbImage& image);
std::vector<uint8_t> EncodePngMask(const BoolMask& mask);
RgbImage DecodePngRgb(const std::vector<uint8_t>& bytes);

// Raw little-endian grids: 16-byte header (4-byte magic, u32 width,
// u32 height, u32 reserved = 0) followed by row-major samples.
inline constexpr char kDepthMagic[5] = "DPTH";
inline constexpr char kInstanceMagic[5] = "INST";

DepthImage ReadDepthF32(const fs::path& path);
void WriteDepthF32(const fs::path& path, const DepthImage& depth);
LabelImage ReadInstanceI32(const fs::path& path);
void WriteInstanceI32(const fs::path& path, const LabelImage& labels);

nlohmann::json ReadJson(const fs::path& path);
// Pretty-printed with a trailing newline.
void WriteJson(const fs::path& path, const nlohmann::json& value);

std::vector<uint8_t> ReadBytes(const fs::path& path);
void WriteBytes(const fs::path& path, const std::vector<uint8_t>& bytes);

nlohmann::json CameraToJson(const Camera& camera);
// Parses and validates; `who` names the camera in error messages.
Camera CameraFromJson(const nlohmann::json& j, const std::string& who);

}  // namespace pointscene
