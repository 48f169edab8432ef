#pragma once

#include <filesystem>

#include "pointscene/scene_model.h"

namespace pointscene {

enum class PlyFormat { kBinaryLittleEndian, kAscii };

struct PlyWriteOptions {
  PlyFormat format = PlyFormat::kBinaryLittleEndian;
  bool only_alive = false;
  // Appends view/u/v/alive properties and a "comment views ..." header line
  // so the file can be matched back to its source pixels.
  bool include_provenance = true;
};

// Vertex properties: x y z (float), red green blue (uchar), instance_id (int),
// then optionally view u v (int) and alive (uchar).
void WritePly(const std::filesystem::path& path, const ScenePointCloud& cloud,
              const PlyWriteOptions& options = {});

// Reads either encoding. Missing optional properties default to
// color 0, instance -1, alive 1, and source (0, i, 0) with no view table.
ScenePointCloud ReadPly(const std::filesystem::path& path);

}  // namespace pointscene
