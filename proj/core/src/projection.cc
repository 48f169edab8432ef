#include "pointscene/projection.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pointscene/error.h"
#include "pointscene/io.h"
#include "pointscene/parallel.h"

namespace pointscene {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr uint32_t kNoPoint = std::numeric_limits<uint32_t>::max();

struct Landing {
  int x = 0;
  int y = 0;
  double depth = kInf;  // +inf marks a culled point
};

// Projects one point and rounds it to a pixel. Points whose splat cannot
// touch the image are culled.
Landing LandPoint(const CameraIntrinsics& k, const CameraPose& pose,
                  const Eigen::Vector3d& p, int radius) {
  const auto proj = ProjectToPixel(k, pose, p);
  if (!proj || !std::isfinite(proj->x) || !std::isfinite(proj->y)) {
    return {};
  }
  const double lo = -0.5 - radius;
  if (proj->x <= lo || proj->y <= lo || proj->x >= k.width - 0.5 + radius ||
      proj->y >= k.height - 0.5 + radius) {
    return {};
  }
  return {RoundToPixel(proj->x), RoundToPixel(proj->y), proj->depth};
}

template <typename Fn>
void ForEachSplatPixel(const Landing& l, int radius, int width, int height,
                       Fn&& fn) {
  const int x0 = std::max(0, l.x - radius);
  const int x1 = std::min(width - 1, l.x + radius);
  const int y0 = std::max(0, l.y - radius);
  const int y1 = std::min(height - 1, l.y + radius);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      fn(static_cast<size_t>(y) * width + x);
    }
  }
}

struct ZBuffer {
  std::vector<double> min_depth;
  std::vector<uint32_t> winner;  // empty when attributes are not needed
};

// Two min-reductions (depth, then tie-band winner index), each computed per
// chunk and merged, so the output is independent of the chunking.
template <typename PointAt>
ZBuffer Rasterize(size_t n, PointAt&& point_at, const CameraIntrinsics& k,
                  const CameraPose& pose, int radius, double z_epsilon,
                  bool want_winner) {
  const size_t pixels = static_cast<size_t>(k.width) * k.height;
  std::vector<Landing> landings(n);
  const int chunks = static_cast<int>(
      std::max<size_t>(1, std::min<size_t>(NumThreads(), n / 4096 + 1)));

  std::vector<std::vector<double>> partial_depth(chunks);
  ParallelForChunks(
      n,
      [&](size_t begin, size_t end, int c) {
        auto& depth = partial_depth[c];
        depth.assign(pixels, kInf);
        for (size_t i = begin; i < end; ++i) {
          const Eigen::Vector3d* p = point_at(i);
          if (p == nullptr) continue;
          landings[i] = LandPoint(k, pose, *p, radius);
          const Landing& l = landings[i];
          if (l.depth == kInf) continue;
          ForEachSplatPixel(l, radius, k.width, k.height, [&](size_t px) {
            depth[px] = std::min(depth[px], l.depth);
          });
        }
      },
      chunks);

  ZBuffer zb;
  zb.min_depth = std::move(partial_depth[0]);
  for (int c = 1; c < chunks; ++c) {
    for (size_t px = 0; px < pixels; ++px) {
      zb.min_depth[px] = std::min(zb.min_depth[px], partial_depth[c][px]);
    }
  }
  if (!want_winner) return zb;

  std::vector<std::vector<uint32_t>> partial_winner(chunks);
  ParallelForChunks(
      n,
      [&](size_t begin, size_t end, int c) {
        auto& winner = partial_winner[c];
        winner.assign(pixels, kNoPoint);
        for (size_t i = begin; i < end; ++i) {
          const Landing& l = landings[i];
          if (l.depth == kInf) continue;
          ForEachSplatPixel(l, radius, k.width, k.height, [&](size_t px) {
            if (l.depth <= zb.min_depth[px] * (1.0 + z_epsilon)) {
              winner[px] = std::min(winner[px], static_cast<uint32_t>(i));
            }
          });
        }
      },
      chunks);
  zb.winner = std::move(partial_winner[0]);
  for (int c = 1; c < chunks; ++c) {
    for (size_t px = 0; px < pixels; ++px) {
      zb.winner[px] = std::min(zb.winner[px], partial_winner[c][px]);
    }
  }
  return zb;
}

}  // namespace

void SplatOptions::Validate() const {
  PS_CHECK(splat_radius >= 0 && splat_radius <= 8,
           ErrorCode::kInvalidArgument, "splat_radius must be in [0, 8]");
  PS_CHECK(z_epsilon > 0.0 && z_epsilon < 0.1, ErrorCode::kInvalidArgument,
           "z_epsilon must be in (0, 0.1)");
}

void ProjectionResult::CheckInvariants() const {
  PS_CHECK(rgb.SameShape(coverage) && depth.SameShape(coverage) &&
               instance.SameShape(coverage),
           ErrorCode::kShapeMismatch, "projection buffers differ in shape");
  for (size_t i = 0; i < coverage.num_pixels(); ++i) {
    const bool covered = coverage.raw()[i] != 0;
    const float z = depth.raw()[i];
    const bool ok = covered ? (std::isfinite(z) && z > 0.0f &&
                               instance.raw()[i] >= kUnlabeled)
                            : (std::isinf(z) && instance.raw()[i] == kUnlabeled);
    PS_CHECK(ok, ErrorCode::kInvalidArgument,
             "projection buffers disagree at pixel " + std::to_string(i));
  }
}

ProjectionResult ProjectPoints(const ScenePointCloud& cloud,
                               const CameraIntrinsics& intrinsics,
                               const CameraPose& pose,
                               const SplatOptions& opts, bool only_alive) {
  opts.Validate();
  PS_CHECK(cloud.size() < kNoPoint, ErrorCode::kInvalidArgument,
           "cloud too large for 32-bit point indices");
  const ZBuffer zb = Rasterize(
      cloud.size(),
      [&](size_t i) -> const Eigen::Vector3d* {
        return (only_alive && !cloud.alive[i]) ? nullptr : &cloud.positions[i];
      },
      intrinsics, pose, opts.splat_radius, opts.z_epsilon, true);

  const int w = intrinsics.width;
  const int h = intrinsics.height;
  ProjectionResult result{
      MakeRgb(w, h), MakeMask(w, h),
      DepthImage(w, h, 1, std::numeric_limits<float>::infinity()),
      LabelImage(w, h, 1, kUnlabeled)};
  for (size_t px = 0; px < zb.winner.size(); ++px) {
    const uint32_t i = zb.winner[px];
    if (i == kNoPoint) continue;
    result.coverage.raw()[px] = 1;
    result.depth.raw()[px] = static_cast<float>(zb.min_depth[px]);
    result.instance.raw()[px] = cloud.instance_id[i];
    for (int c = 0; c < 3; ++c) {
      result.rgb.raw()[px * 3 + c] = cloud.colors[i][c];
    }
  }
  return result;
}

WarpedDepth WarpDepth(const PointMap& pointmap,
                      const CameraIntrinsics& target_intrinsics,
                      const CameraPose& target_pose) {
  const ZBuffer zb = Rasterize(
      pointmap.points.size(),
      [&](size_t i) -> const Eigen::Vector3d* {
        return pointmap.valid.raw()[i] ? &pointmap.points[i] : nullptr;
      },
      target_intrinsics, target_pose, 0, SplatOptions{}.z_epsilon, false);
  WarpedDepth warped{DepthImage(target_intrinsics.width,
                                target_intrinsics.height, 1,
                                std::numeric_limits<float>::infinity())};
  for (size_t px = 0; px < zb.min_depth.size(); ++px) {
    if (zb.min_depth[px] != kInf) {
      warped.values.raw()[px] = static_cast<float>(zb.min_depth[px]);
    }
  }
  return warped;
}

std::optional<PixelLanding> LandOnPixel(const CameraIntrinsics& intrinsics,
                                        const CameraPose& pose,
                                        const Eigen::Vector3d& p_world) {
  const Landing l = LandPoint(intrinsics, pose, p_world, 0);
  if (l.depth == kInf) return std::nullopt;
  return PixelLanding{l.x, l.y, l.depth};
}

BoolMask RasterizeFootprint(std::span<const Eigen::Vector3d> points,
                            const CameraIntrinsics& intrinsics,
                            const CameraPose& pose, int splat_radius) {
  BoolMask mask = MakeMask(intrinsics.width, intrinsics.height);
  for (const Eigen::Vector3d& p : points) {
    const Landing l = LandPoint(intrinsics, pose, p, splat_radius);
    if (l.depth == kInf) continue;
    ForEachSplatPixel(l, splat_radius, intrinsics.width, intrinsics.height,
                      [&](size_t px) { mask.raw()[px] = 1; });
  }
  return mask;
}

void WriteProjectionResult(const fs::path& dir,
                           const ProjectionResult& result) {
  fs::create_directories(dir);
  WritePngRgb(dir / "proj_rgb.png", result.rgb);
  WritePngMask(dir / "proj_mask.png", result.coverage);
  WriteDepthF32(dir / "proj_depth.f32", result.depth);
  WriteInstanceI32(dir / "proj_instance.i32", result.instance);
}

ProjectionResult ReadProjectionResult(const fs::path& dir) {
  ProjectionResult result{ReadPngRgb(dir / "proj_rgb.png"),
                          ReadPngMask(dir / "proj_mask.png"),
                          ReadDepthF32(dir / "proj_depth.f32"),
                          ReadInstanceI32(dir / "proj_instance.i32")};
  result.CheckInvariants();
  return result;
}

}  // namespace pointscene
