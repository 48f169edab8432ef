#pragma once

#include <filesystem>
#include <optional>
#include <span>

#include "pointscene/camera.h"
#include "pointscene/image.h"
#include "pointscene/scene_model.h"

namespace pointscene {

struct SplatOptions {
  int splat_radius = 0;     // square splat half-width in pixels, 0..8
  double z_epsilon = 1e-6;  // relative band treated as a depth tie

  void Validate() const;

  friend bool operator==(const SplatOptions&, const SplatOptions&) = default;
};

// Z-buffered rendering of a cloud into one camera. Uncovered pixels hold
// rgb 0, depth +inf and instance -1.
struct ProjectionResult {
  RgbImage rgb;
  BoolMask coverage;
  DepthImage depth;
  LabelImage instance;

  int width() const { return coverage.width(); }
  int height() const { return coverage.height(); }
  void CheckInvariants() const;

  friend bool operator==(const ProjectionResult&,
                         const ProjectionResult&) = default;
};

// Depth of the nearest warped source point per target pixel, +inf where
// nothing lands.
struct WarpedDepth {
  DepthImage values;
};

// Rasterizes every (optionally only alive) point: world -> camera, cull
// z <= kMinProjectionDepth, round to the nearest pixel, splat a square of
// the given radius. Per pixel the depth buffer holds the minimum depth and
// rgb/instance come from the lowest point index whose depth is within
// z_epsilon (relative) of that minimum. The result does not depend on the
// thread count.
ProjectionResult ProjectPoints(const ScenePointCloud& cloud,
                               const CameraIntrinsics& intrinsics,
                               const CameraPose& pose,
                               const SplatOptions& opts = {},
                               bool only_alive = true);

WarpedDepth WarpDepth(const PointMap& pointmap,
                      const CameraIntrinsics& target_intrinsics,
                      const CameraPose& target_pose);

struct PixelLanding {
  int x = 0;
  int y = 0;
  double depth = 0.0;
};

// Single-pixel landing under the same rule ProjectPoints uses with
// splat_radius = 0; nullopt when culled or out of bounds.
std::optional<PixelLanding> LandOnPixel(const CameraIntrinsics& intrinsics,
                                        const CameraPose& pose,
                                        const Eigen::Vector3d& p_world);

// Rasterizes arbitrary world points with no z-test: a pixel is set when any
// point's splat touches it.
BoolMask RasterizeFootprint(std::span<const Eigen::Vector3d> points,
                            const CameraIntrinsics& intrinsics,
                            const CameraPose& pose, int splat_radius);

// proj_rgb.png, proj_mask.png, proj_depth.f32, proj_instance.i32.
void WriteProjectionResult(const std::filesystem::path& dir,
                           const ProjectionResult& result);
ProjectionResult ReadProjectionResult(const std::filesystem::path& dir);

}  // namespace pointscene
