#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pointscene/camera.h"
#include "pointscene/eval.h"
#include "pointscene/image.h"
#include "pointscene/scene_model.h"

namespace pointscene {

// Open-top box room: floor z = 0 on [-half_extent, half_extent]^2 and four
// walls up to wall_height, with yawed boxes standing on the floor. World
// +z is up. Cameras sit on a ring and look down at the room center; rays
// leaving over the walls see sky (depth 0). Boxes stay below a quarter of
// the lowest camera height so a box silhouette never sits in front of floor
// more than 4/3 times farther away.
struct SynthConfig {
  int num_views = 8;
  int num_objects = 5;
  int num_test_views = 2;
  int width = 160;
  int height = 120;
  double focal = 80.0;
  uint64_t seed = 7;

  double half_extent = 2.0;
  double wall_height = 3.0;
  double ring_radius = 1.4;
  double camera_height_min = 1.8;
  double camera_height_max = 2.2;
  double object_radius = 0.9;  // box centers stay within this disk
  double box_size_min = 0.25;
  double box_size_max = 0.45;
  double box_height_min = 0.15;
  double box_height_max = 0.4;

  // Fraction of pixels per view whose depth is replaced by
  // floater_depth_ratio times the true depth.
  double floater_fraction = 0.0;
  double floater_depth_ratio = 0.4;

  // Transform from the ground-truth frame into the bundle frame. Bundle
  // poses and depths are expressed in the transformed frame.
  std::optional<SimilarityTransform> offset;

  // Scenes where some view sees an object on fewer than this many pixels
  // (but more than zero) are rejected and re-drawn.
  int min_visible_pixels = 40;
  int max_attempts = 500;

  void Validate() const;
};

struct SynthBox {
  Eigen::Vector2d center;
  Eigen::Vector2d half_size;
  double yaw = 0.0;
  double height = 0.0;
};

// Surface ids in ray-cast label images.
inline constexpr int kSurfaceSky = -1;
inline constexpr int kSurfaceFloor = 0;
inline constexpr int kSurfaceWallFirst = 1;  // 1..4
inline constexpr int kSurfaceBoxFirst = 5;   // 5 + object index

struct RayCastView {
  DepthImage depth;        // z-depth, 0 for sky
  LabelImage surface;      // surface id per pixel
  RgbImage rgb;
};

struct SynthScene {
  SynthConfig config;
  std::vector<SynthBox> boxes;
  std::vector<Camera> gt_cameras;   // ground-truth frame
  std::vector<Camera> test_cameras; // ground-truth frame, not in the bundle
  std::vector<RayCastView> views;   // ground-truth frame, per input view
  std::vector<RayCastView> test_views;
  std::vector<BoolMask> floaters;   // per input view
  SceneBundle bundle;               // bundle frame, floaters applied

  // Per view: object index + 1 where a box is visible, 0 elsewhere.
  LabelImage ObjectLabels(size_t view) const;
  // Object index per cloud point (by source pixel), -1 for background.
  std::vector<int32_t> PointObjects(const ScenePointCloud& cloud) const;
  // Floater flag per cloud point (by source pixel).
  std::vector<uint8_t> PointFloaters(const ScenePointCloud& cloud) const;
};

std::string SynthViewId(int index);       // "v00", "v01", ...
std::string SynthTestViewId(int index);   // "t00", ...

// Casts one view against the room; exposed for oracle checks.
RayCastView RayCast(const SynthConfig& cfg, std::span<const SynthBox> boxes,
                    const Camera& camera);

// Builds a scene deterministically from cfg.seed. Throws kInvalidArgument
// when no acceptable layout is found within max_attempts.
SynthScene GenerateScene(const SynthConfig& cfg);

// Writes <dir>/bundle (scene bundle) and <dir>/gt:
//   gt/synth.json                     config, boxes, offset
//   gt/views/<id>/camera.json         ground-truth camera
//   gt/views/<id>/depth.f32           true depth (ground-truth frame)
//   gt/views/<id>/object_labels.png   16-bit, object index + 1
//   gt/views/<id>/floaters.png        injected floater pixels
//   gt/test_views/<id>/{camera.json,rgb.png}
void WriteSynthScene(const std::filesystem::path& dir, const SynthScene& scene);

}  // namespace pointscene
