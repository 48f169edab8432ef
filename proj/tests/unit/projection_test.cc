#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>

#include "pointscene/parallel.h"
#include "pointscene/projection.h"
#include "pointscene/synthetic.h"
#include "support.h"

namespace pointscene {
namespace {

using testing::CloudFromPoints;
using testing::Intrinsics;
using testing::Rng;
using testing::TempDir;
using testing::ThrownCode;

constexpr float kInfF = std::numeric_limits<float>::infinity();

// Sequential z-buffer written straight from the contract.
struct OracleBuffers {
  std::vector<double> zmin;
  std::vector<long> winner;
};

OracleBuffers OracleRaster(const ScenePointCloud& cloud,
                           const CameraIntrinsics& k, const CameraPose& pose,
                           int radius, double eps, bool only_alive) {
  const size_t n_px = static_cast<size_t>(k.width) * k.height;
  OracleBuffers out{std::vector<double>(n_px, INFINITY),
                    std::vector<long>(n_px, -1)};
  std::vector<std::vector<std::pair<double, long>>> hits(n_px);
  for (size_t i = 0; i < cloud.size(); ++i) {
    if (only_alive && !cloud.alive[i]) continue;
    const Eigen::Vector3d q =
        pose.rotation.transpose() * (cloud.positions[i] - pose.translation);
    if (q.z() <= 1e-6) continue;
    const long x = std::lround(k.fx * q.x() / q.z() + k.cx);
    const long y = std::lround(k.fy * q.y() / q.z() + k.cy);
    for (long dy = -radius; dy <= radius; ++dy) {
      for (long dx = -radius; dx <= radius; ++dx) {
        const long px = x + dx, py = y + dy;
        if (px < 0 || py < 0 || px >= k.width || py >= k.height) continue;
        hits[py * k.width + px].push_back({q.z(), static_cast<long>(i)});
      }
    }
  }
  for (size_t p = 0; p < n_px; ++p) {
    for (const auto& [z, i] : hits[p]) out.zmin[p] = std::min(out.zmin[p], z);
    for (const auto& [z, i] : hits[p]) {
      if (z <= out.zmin[p] * (1 + eps) && (out.winner[p] < 0 || i < out.winner[p])) {
        out.winner[p] = i;
      }
    }
  }
  return out;
}

void ExpectMatchesOracle(const ScenePointCloud& cloud, const CameraIntrinsics& k,
                         const CameraPose& pose, const SplatOptions& opts,
                         bool only_alive) {
  const ProjectionResult r = ProjectPoints(cloud, k, pose, opts, only_alive);
  const OracleBuffers o =
      OracleRaster(cloud, k, pose, opts.splat_radius, opts.z_epsilon, only_alive);
  ASSERT_NO_THROW(r.CheckInvariants());
  for (size_t p = 0; p < o.zmin.size(); ++p) {
    const long w = o.winner[p];
    ASSERT_EQ(r.coverage.raw()[p] != 0, w >= 0) << "pixel " << p;
    if (w < 0) continue;
    ASSERT_EQ(r.depth.raw()[p], static_cast<float>(o.zmin[p]));
    ASSERT_EQ(r.instance.raw()[p], cloud.instance_id[w]);
    for (int c = 0; c < 3; ++c) {
      ASSERT_EQ(r.rgb.raw()[p * 3 + c], cloud.colors[w][c]);
    }
  }
}

TEST(ProjectPoints, SinglePointAtPrincipalPoint) {
  const CameraIntrinsics k = Intrinsics(100, 50, 50, 101, 101);
  const ProjectionResult r = ProjectPoints(CloudFromPoints({{0, 0, 2}}), k, {});
  EXPECT_EQ(CountTrue(r.coverage), 1u);
  EXPECT_TRUE(r.coverage.at(50, 50));
  EXPECT_EQ(r.depth.at(50, 50), 2.0f);
  EXPECT_EQ(r.depth.at(0, 0), kInfF);
  EXPECT_EQ(r.instance.at(0, 0), kUnlabeled);
}

TEST(ProjectPoints, NearerPointWinsPixel) {
  const CameraIntrinsics k = Intrinsics(100, 50, 50, 101, 101);
  ScenePointCloud c = CloudFromPoints({{0, 0, 2}, {0, 0, 1}},
                                      {Rgb8{10, 10, 10}, Rgb8{200, 0, 0}});
  c.instance_id = {4, 7};
  const ProjectionResult r = ProjectPoints(c, k, {});
  EXPECT_EQ(r.depth.at(50, 50), 1.0f);
  EXPECT_EQ(r.rgb.at(50, 50, 0), 200);
  EXPECT_EQ(r.instance.at(50, 50), 7);
}

TEST(ProjectPoints, TieGoesToLowestIndex) {
  const CameraIntrinsics k = Intrinsics(100, 50, 50, 101, 101);
  const ScenePointCloud c = CloudFromPoints(
      {{0, 0, 1.0}, {0.001, 0, 1.0 - 1e-8}, {0, 0.001, 1.0}},
      {Rgb8{1, 0, 0}, Rgb8{2, 0, 0}, Rgb8{3, 0, 0}});
  const ProjectionResult r = ProjectPoints(c, k, {});
  EXPECT_EQ(r.rgb.at(50, 50, 0), 1);  // within the 1e-6 band of the minimum
}

TEST(ProjectPoints, EmptyCloudAndCulling) {
  const CameraIntrinsics k = Intrinsics(10, 5, 5, 10, 10);
  EXPECT_EQ(CountTrue(ProjectPoints(ScenePointCloud{}, k, {}).coverage), 0u);
  const ScenePointCloud behind = CloudFromPoints(
      {{0, 0, -1}, {0, 0, 0}, {0, 0, 5e-7}, {100, 0, 1}, {0, -100, 1}});
  EXPECT_EQ(CountTrue(ProjectPoints(behind, k, {}).coverage), 0u);
}

TEST(ProjectPoints, DeadPointsExcludedOnlyWhenRequested) {
  const CameraIntrinsics k = Intrinsics(10, 5, 5, 11, 11);
  ScenePointCloud c = CloudFromPoints({{0, 0, 1}, {0.2, 0, 1}});
  c.alive[0] = 0;
  EXPECT_EQ(CountTrue(ProjectPoints(c, k, {}, {}, true).coverage), 1u);
  EXPECT_EQ(CountTrue(ProjectPoints(c, k, {}, {}, false).coverage), 2u);
}

TEST(ProjectPoints, SquareSplatClippedAtBorder) {
  const CameraIntrinsics k = Intrinsics(10, 0, 0, 8, 8);
  SplatOptions opts;
  opts.splat_radius = 2;
  const ProjectionResult r = ProjectPoints(CloudFromPoints({{0, 0, 1}}), k, {}, opts);
  EXPECT_EQ(CountTrue(r.coverage), 9u);  // 3x3 corner of a 5x5 splat
  EXPECT_TRUE(r.coverage.at(2, 2));
  EXPECT_FALSE(r.coverage.at(3, 0));
}

TEST(ProjectPoints, RoundingAtHalfPixel) {
  // 0.5 rounds away from zero: x = 2.5 lands on 3, x = -0.5 is dropped.
  const CameraIntrinsics k = Intrinsics(1, 0, 0, 5, 5);
  const ProjectionResult r =
      ProjectPoints(CloudFromPoints({{2.5, 0, 1}, {-0.5, 1, 1}}), k, {});
  EXPECT_TRUE(r.coverage.at(3, 0));
  EXPECT_EQ(CountTrue(r.coverage), 1u);
}

TEST(ProjectPoints, OptionValidation) {
  const CameraIntrinsics k = Intrinsics(10, 5, 5, 10, 10);
  SplatOptions opts;
  opts.splat_radius = 9;
  EXPECT_EQ(ThrownCode([&] { ProjectPoints(ScenePointCloud{}, k, {}, opts); }),
            ErrorCode::kInvalidArgument);
  opts = {};
  opts.z_epsilon = 0.0;
  EXPECT_EQ(ThrownCode([&] { ProjectPoints(ScenePointCloud{}, k, {}, opts); }),
            ErrorCode::kInvalidArgument);
}

// Random clouds with many exact and near duplicates, so ties are common.
ScenePointCloud RandomCloud(Rng& rng, size_t n) {
  std::vector<Eigen::Vector3d> pts;
  for (size_t i = 0; i < n; ++i) {
    if (!pts.empty() && rng.Bernoulli(0.3)) {
      Eigen::Vector3d p = pts[rng.Int(0, static_cast<int>(pts.size()) - 1)];
      if (rng.Bernoulli(0.5)) p *= 1.0 + rng.Uniform(-2e-6, 2e-6);
      pts.push_back(p);
    } else {
      pts.push_back({rng.Uniform(-2, 2), rng.Uniform(-2, 2), rng.Uniform(-1, 6)});
    }
  }
  ScenePointCloud c = CloudFromPoints(pts);
  for (size_t i = 0; i < n; ++i) {
    c.instance_id[i] = rng.Int(-1, 5);
    c.alive[i] = rng.Bernoulli(0.9);
  }
  return c;
}

TEST(ProjectPointsProperty, MatchesSequentialOracle) {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const ScenePointCloud c = RandomCloud(rng, rng.Int(0, 3000));
    CameraPose pose;
    pose.rotation = testing::YawRotation(rng.Uniform(-20, 20));
    pose.translation = rng.Vec3(-0.5, 0.5);
    SplatOptions opts;
    opts.splat_radius = rng.Int(0, 3);
    opts.z_epsilon = rng.Bernoulli(0.5) ? 1e-6 : 1e-3;
    ExpectMatchesOracle(c, Intrinsics(rng.Uniform(5, 40), 15.5, 11.5, 32, 24),
                        pose, opts, rng.Bernoulli(0.5));
  }
}

TEST(ProjectPointsProperty, IndependentOfThreadCount) {
  Rng rng(4);
  const ScenePointCloud c = RandomCloud(rng, 60000);
  const CameraIntrinsics k = Intrinsics(30, 32, 24, 64, 48);
  SplatOptions opts;
  opts.splat_radius = 1;
  SetNumThreads(1);
  const ProjectionResult one = ProjectPoints(c, k, {}, opts);
  for (int t : {2, 3, 7, 16}) {
    SetNumThreads(t);
    EXPECT_EQ(ProjectPoints(c, k, {}, opts), one) << t << " threads";
  }
  SetNumThreads(0);
}

TEST(ProjectPointsProperty, PermutationKeepsDepthAndCoverage) {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const ScenePointCloud c = RandomCloud(rng, 2000);
    std::vector<size_t> perm(c.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    ScenePointCloud shuffled;
    shuffled.view_ids = c.view_ids;
    for (size_t i : perm) shuffled.PushFrom(c, i);
    const CameraIntrinsics k = Intrinsics(20, 15.5, 11.5, 32, 24);
    const ProjectionResult a = ProjectPoints(c, k, {});
    const ProjectionResult b = ProjectPoints(shuffled, k, {});
    EXPECT_EQ(a.depth, b.depth);
    EXPECT_EQ(a.coverage, b.coverage);
    // Attributes can only differ where two points share the tie band.
    const OracleBuffers o = OracleRaster(c, k, {}, 0, 1e-6, true);
    for (size_t p = 0; p < o.zmin.size(); ++p) {
      if (a.instance.raw()[p] == b.instance.raw()[p]) continue;
      int in_band = 0;
      for (size_t i = 0; i < c.size(); ++i) {
        const auto land = LandOnPixel(k, {}, c.positions[i]);
        if (c.alive[i] && land &&
            static_cast<size_t>(land->y * k.width + land->x) == p &&
            land->depth <= o.zmin[p] * (1 + 1e-6)) {
          ++in_band;
        }
      }
      EXPECT_GE(in_band, 2) << "pixel " << p;
    }
  }
}

TEST(ProjectPointsProperty, RemovingPointsNeverDecreasesDepth) {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    ScenePointCloud c = RandomCloud(rng, 1500);
    const CameraIntrinsics k = Intrinsics(20, 15.5, 11.5, 32, 24);
    const ProjectionResult before = ProjectPoints(c, k, {});
    for (size_t i = 0; i < c.size(); ++i) {
      if (rng.Bernoulli(0.3)) c.alive[i] = 0;
    }
    const ProjectionResult after = ProjectPoints(c, k, {});
    for (size_t p = 0; p < before.coverage.num_pixels(); ++p) {
      if (after.coverage.raw()[p]) {
        EXPECT_TRUE(before.coverage.raw()[p]);
      }
      EXPECT_GE(after.depth.raw()[p], before.depth.raw()[p]);
    }
  }
}

TEST(ProjectionIo, RoundTrip) {
  TempDir dir;
  Rng rng(2);
  const ProjectionResult r =
      ProjectPoints(RandomCloud(rng, 500), Intrinsics(20, 15.5, 11.5, 32, 24), {});
  WriteProjectionResult(dir.path(), r);
  EXPECT_EQ(ReadProjectionResult(dir.path()), r);
  for (const char* f : {"proj_rgb.png", "proj_mask.png", "proj_depth.f32",
                        "proj_instance.i32"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
}

TEST(WarpDepth, AxialTranslationSubtracts) {
  PointMap m;
  m.width = m.height = 1;
  m.points = {{0, 0, 4}};
  m.valid = MakeMask(1, 1, true);
  CameraPose target;
  target.translation = {0, 0, 2};
  const WarpedDepth w = WarpDepth(m, Intrinsics(10, 5, 5, 11, 11), target);
  EXPECT_EQ(w.values.at(5, 5), 2.0f);
  EXPECT_EQ(std::count(w.values.raw().begin(), w.values.raw().end(), kInfF),
            120);
}

TEST(WarpDepth, IdentityWarpReproducesDepth) {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const CameraIntrinsics k = Intrinsics(rng.Uniform(20, 200), 23.5, 17.5, 48, 36);
    CameraPose pose;
    pose.rotation = rng.Rotation();
    pose.translation = rng.Vec3(-3, 3);
    DepthImage depth(48, 36);
    for (float& z : depth.raw()) {
      z = rng.Bernoulli(0.1) ? 0.0f : static_cast<float>(rng.Uniform(0.2, 30));
    }
    const ViewFrame f = testing::MakeFrame("v", k, pose, depth);
    const WarpedDepth w = WarpDepth(Unproject(f), k, pose);
    for (size_t p = 0; p < depth.num_pixels(); ++p) {
      const float z = depth.raw()[p];
      if (z > 0) {
        EXPECT_NEAR(w.values.raw()[p] / z, 1.0, 1e-5);
      } else {
        EXPECT_EQ(w.values.raw()[p], kInfF);
      }
    }
  }
}

// Two cameras orbiting a pair of small boxes 30 degrees apart in yaw. Landing
// on the nearest pixel center shifts a sample by up to half a pixel, so the
// focal length is long and the box faces sit about 45 degrees off both view
// azimuths, keeping that shift under the tolerance on every visible surface.
// The source is sampled at three times the target's resolution so every
// target pixel receives points.
TEST(WarpDepth, ThirtyDegreeYawAgreesWithAnalyticDepth) {
  SynthConfig cfg;
  std::vector<SynthBox> boxes(2);
  boxes[0].center = {-0.04, 0.56};
  boxes[0].half_size = {0.07, 0.05};
  boxes[0].yaw = 0.78;
  boxes[0].height = 0.12;
  boxes[1].center = {0.12, 0.42};
  boxes[1].half_size = {0.05, 0.05};
  boxes[1].yaw = 0.8;
  boxes[1].height = 0.08;

  const Eigen::Vector3d target(0.04, 0.5, 0.04);
  const auto orbit = [&](double yaw_deg) {
    const double elevation = 30.0 * std::numbers::pi / 180.0, range = 2.2;
    const Eigen::Vector3d back =
        testing::YawRotation(yaw_deg) * Eigen::Vector3d(0, -1, 0);
    return Eigen::Vector3d(target + range * std::cos(elevation) * back +
                           Eigen::Vector3d(0, 0, range * std::sin(elevation)));
  };
  const Eigen::Vector3d eye_a = orbit(-15), eye_b = orbit(15);
  Camera a, b;
  a.intrinsics = Intrinsics(4800, 479.5, 359.5, 960, 720);
  a.pose.rotation = LookAtRotation(eye_a, target, {0, 0, 1});
  a.pose.translation = eye_a;
  b.intrinsics = Intrinsics(1600, 159.5, 119.5, 320, 240);
  b.pose.rotation = LookAtRotation(eye_b, target, {0, 0, 1});
  b.pose.translation = eye_b;

  const RayCastView va = RayCast(cfg, boxes, a);
  const ViewFrame fa = testing::MakeFrame("a", a.intrinsics, a.pose, va.depth);
  const WarpedDepth w = WarpDepth(Unproject(fa), b.intrinsics, b.pose);

  size_t mutual = 0, agree = 0;
  for (int v = 0; v < 240; ++v) {
    for (int u = 0; u < 320; ++u) {
      const double zb = testing::OracleDepth(cfg, boxes, b, u, v);
      if (!std::isfinite(zb)) continue;
      const Eigen::Vector3d x = UnprojectPixel(b.intrinsics, b.pose, u, v, zb);
      const auto pa = ProjectToPixel(a.intrinsics, a.pose, x);
      if (!pa || pa->x < 0 || pa->y < 0 || pa->x > 959 || pa->y > 719) continue;
      const double za = testing::OracleDepth(cfg, boxes, a, pa->x, pa->y);
      if (std::abs(za - pa->depth) > 1e-6 * pa->depth) continue;  // occluded
      ++mutual;
      agree += std::abs(w.values.at(u, v) - zb) <= 1e-3 * zb;
    }
  }
  ASSERT_GT(mutual, 5000u);
  EXPECT_GE(static_cast<double>(agree) / mutual, 0.95)
      << agree << " / " << mutual;
}

// Every view of the generated room rendered from the full cloud. With zero
// splat radius, a point from another view can win a pixel where the visible
// surface left no sample (silhouettes, grazing walls), so a winner may sit
// behind the analytic first surface but never in front of it.
TEST(ProjectPoints, BoxRoomCloudIntoOwnViews) {
  SynthConfig cfg;
  const SynthScene scene = GenerateScene(cfg);
  const std::vector<PointMap> maps = UnprojectAll(scene.bundle.frames);
  const ScenePointCloud cloud = AssemblePointCloud(maps, scene.bundle.frames);
  for (size_t view = 0; view < scene.bundle.frames.size(); ++view) {
    const ViewFrame& f = scene.bundle.frames[view];
    const ProjectionResult r = ProjectPoints(cloud, f.intrinsics, f.pose);
    const OracleBuffers o =
        OracleRaster(cloud, f.intrinsics, f.pose, 0, 1e-6, true);
    size_t valid = 0, covered = 0, checked = 0, on_surface = 0, in_front = 0;
    for (int v = 0; v < f.height(); ++v) {
      for (int u = 0; u < f.width(); ++u) {
        const size_t p = static_cast<size_t>(v) * f.width() + u;
        if (f.depth.at(u, v) > 0) {
          ++valid;
          covered += r.coverage.raw()[p];
        }
        if (!r.coverage.raw()[p]) continue;
        const auto px =
            ProjectToPixel(f.intrinsics, f.pose, cloud.positions[o.winner[p]]);
        ASSERT_TRUE(px);
        const double analytic = testing::OracleDepth(
            cfg, scene.boxes, {f.intrinsics, f.pose}, px->x, px->y);
        ++checked;
        on_surface += std::abs(r.depth.raw()[p] - analytic) <= 1e-4 * analytic;
        in_front += r.depth.raw()[p] < analytic * (1 - 1e-4);
      }
    }
    EXPECT_GE(covered, 0.99 * valid) << f.view_id;
    EXPECT_EQ(in_front, 0u) << f.view_id;
    EXPECT_GE(on_surface, 0.995 * checked) << f.view_id;
  }
}

TEST(ProjectPoints, OwnPointsRoundTripToTheirPixels) {
  SynthConfig cfg;
  const SynthScene scene = GenerateScene(cfg);
  for (const ViewFrame& f : scene.bundle.frames) {
    const PointMap m = Unproject(f);
    for (int v = 0; v < f.height(); ++v) {
      for (int u = 0; u < f.width(); ++u) {
        if (!m.valid.at(u, v)) continue;
        const auto l = LandOnPixel(f.intrinsics, f.pose, m.at(u, v));
        ASSERT_TRUE(l);
        EXPECT_EQ(l->x, u);
        EXPECT_EQ(l->y, v);
      }
    }
  }
}

TEST(RasterizeFootprint, NoDepthTest) {
  const CameraIntrinsics k = Intrinsics(10, 5, 5, 11, 11);
  const std::vector<Eigen::Vector3d> pts = {{0, 0, 1}, {0, 0, 5}, {0.3, 0, 1}};
  const BoolMask m = RasterizeFootprint(pts, k, {}, 0);
  EXPECT_EQ(CountTrue(m), 2u);
  EXPECT_TRUE(m.at(5, 5));
  EXPECT_TRUE(m.at(8, 5));
  EXPECT_EQ(CountTrue(RasterizeFootprint(pts, k, {}, 1)), 18u);
}

}  // namespace
}  // namespace pointscene
