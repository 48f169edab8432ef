#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pointscene/camera.h"
#include "pointscene/image.h"

namespace pointscene {

using Rgb8 = std::array<uint8_t, 3>;
using PointIndex = uint32_t;

inline constexpr int32_t kUnlabeled = -1;

// Per-view 2D instance labels: 0 = background, k >= 1 a mask within the view.
struct InstanceMask2D {
  std::string view_id;
  LabelImage labels;

  friend bool operator==(const InstanceMask2D&,
                         const InstanceMask2D&) = default;
};

struct ViewFrame {
  std::string view_id;
  RgbImage rgb;
  DepthImage depth;  // z-depth in meters, 0 = invalid
  CameraIntrinsics intrinsics;
  CameraPose pose;
  std::optional<InstanceMask2D> masks;

  int width() const { return intrinsics.width; }
  int height() const { return intrinsics.height; }
  Camera camera() const { return {intrinsics, pose}; }

  // Shape agreement and depth/camera invariants.
  void Validate() const;

  friend bool operator==(const ViewFrame&, const ViewFrame&) = default;
};

// Pixel-aligned world points of one view. Invalid pixels carry NaN and are
// excluded from every downstream aggregation.
struct PointMap {
  int width = 0;
  int height = 0;
  std::vector<Eigen::Vector3d> points;
  BoolMask valid;

  const Eigen::Vector3d& at(int u, int v) const {
    return points[static_cast<size_t>(v) * width + u];
  }
  size_t NumValid() const { return CountTrue(valid); }
};

struct PointSource {
  int32_t view = 0;  // index into ScenePointCloud::view_ids
  int32_t u = 0;
  int32_t v = 0;

  friend bool operator==(const PointSource&, const PointSource&) = default;
  friend auto operator<=>(const PointSource&, const PointSource&) = default;
};

// Aggregated scene cloud stored as parallel arrays.
struct ScenePointCloud {
  std::vector<std::string> view_ids;
  std::vector<Eigen::Vector3d> positions;
  std::vector<Rgb8> colors;
  std::vector<PointSource> sources;
  std::vector<int32_t> instance_id;
  std::vector<uint8_t> alive;

  size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
  size_t NumAlive() const;

  void Reserve(size_t n);
  void PushBack(const Eigen::Vector3d& position, const Rgb8& color,
                const PointSource& source, int32_t instance = kUnlabeled,
                bool is_alive = true);
  // Copies point `index` of `other` (same view table) to the end.
  void PushFrom(const ScenePointCloud& other, size_t index);

  int ViewIndex(const std::string& view_id) const;  // -1 when absent

  // Parallel lengths, unique sources, instance ids >= -1.
  void CheckInvariants() const;

  friend bool operator==(const ScenePointCloud&,
                         const ScenePointCloud&) = default;
};

struct SceneMetadata {
  std::string scene_id;
  std::string units = "meters";
  std::string convention = "camera_to_world/x_right_y_down_z_forward";

  friend bool operator==(const SceneMetadata&, const SceneMetadata&) = default;
};

struct SceneBundle {
  SceneMetadata metadata;
  std::vector<ViewFrame> frames;  // sorted by view_id

  int IndexOf(const std::string& view_id) const;  // -1 when absent
  std::vector<std::string> ViewIds() const;

  friend bool operator==(const SceneBundle&, const SceneBundle&) = default;
};

// Reads a bundle directory (scene.json + views/<id>/...). Frames come back
// sorted by view_id with every invariant checked.
SceneBundle LoadSceneBundle(const std::filesystem::path& dir);
void WriteSceneBundle(const std::filesystem::path& dir,
                      const SceneBundle& bundle);

PointMap Unproject(const ViewFrame& frame);
std::vector<PointMap> UnprojectAll(std::span<const ViewFrame> frames);

// Concatenates the valid pixels of every view (views in the given order,
// pixels row-major). Throws kLengthMismatch when the spans disagree.
ScenePointCloud AssemblePointCloud(std::span<const PointMap> pointmaps,
                                   std::span<const ViewFrame> frames);

// Map from pixel to cloud index for one source view; -1 where no point.
Image<int64_t> SourceIndexImage(const ScenePointCloud& cloud, int view,
                                int width, int height);

}  // namespace pointscene
