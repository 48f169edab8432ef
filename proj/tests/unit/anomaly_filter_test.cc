#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

#include "pointscene/anomaly_filter.h"
#include "pointscene/synthetic.h"
#include "support.h"

namespace pointscene {
namespace {

using testing::Intrinsics;
using testing::MakeFrame;
using testing::Rng;
using testing::ThrownCode;

// Two 1x1 views sharing one camera, so a point's depth in the other view
// is its own depth.
std::vector<ViewFrame> PixelPair(float z0, float z1) {
  const CameraIntrinsics k = Intrinsics(1, 0, 0, 1, 1);
  return {MakeFrame("v00", k, {}, DepthImage(1, 1, 1, z0)),
          MakeFrame("v01", k, {}, DepthImage(1, 1, 1, z1))};
}

ConsistencyReport Check(const std::vector<ViewFrame>& frames,
                      const FilterConfig& cfg = {}) {
  return ConsistencyMasks(UnprojectAll(frames), frames, cfg);
}

TEST(Consistency, NearerThanTauIsViolation) {
  const ConsistencyReport r = Check(PixelPair(1.0f, 2.0f));
  EXPECT_EQ(r.views[0].flagged, 1u);
  EXPECT_FALSE(r.views[0].valid.at(0, 0));
  // 2.0 against 1.0 is the occluded-behind case for the other view.
  EXPECT_EQ(r.views[1].flagged, 0u);
  EXPECT_EQ(r.pairs_evaluated, 2u);
}

TEST(Consistency, BehindIsNotViolation) {
  const ConsistencyReport r = Check(PixelPair(2.5f, 2.0f));
  EXPECT_EQ(r.views[0].tested, 1u);
  EXPECT_EQ(r.views[0].violations, 0u);
  EXPECT_TRUE(r.views[0].valid.at(0, 0));
  EXPECT_EQ(r.TotalFlagged(), 0u);
}

TEST(Consistency, ZeroNativeDepthIsNotTested) {
  const ConsistencyReport r = Check(PixelPair(1.0f, 0.0f));
  EXPECT_EQ(r.views[0].points, 1u);
  EXPECT_EQ(r.views[0].tested, 0u);
  EXPECT_TRUE(r.views[0].valid.at(0, 0));
  EXPECT_EQ(r.views[1].points, 0u);
  EXPECT_FALSE(r.views[1].valid.at(0, 0));
}

TEST(Consistency, MinObservationsKeepsThinEvidence) {
  FilterConfig cfg;
  cfg.min_observations = 2;
  const ConsistencyReport r = Check(PixelPair(1.0f, 2.0f), cfg);
  EXPECT_EQ(r.views[0].violated, 1u);
  EXPECT_EQ(r.views[0].flagged, 0u);
  EXPECT_TRUE(r.views[0].valid.at(0, 0));
}

TEST(Consistency, MinViolationsNeedsEnoughFailures) {
  const CameraIntrinsics k = Intrinsics(1, 0, 0, 1, 1);
  const std::vector<ViewFrame> frames = {
      MakeFrame("a", k, {}, DepthImage(1, 1, 1, 1.0f)),
      MakeFrame("b", k, {}, DepthImage(1, 1, 1, 2.0f)),
      MakeFrame("c", k, {}, DepthImage(1, 1, 1, 1.1f))};
  FilterConfig cfg;
  cfg.min_violations = 2;
  EXPECT_EQ(Check(frames, cfg).views[0].flagged, 0u);
  cfg.min_violations = 1;
  EXPECT_EQ(Check(frames, cfg).views[0].flagged, 1u);
}

TEST(Consistency, Errors) {
  const std::vector<ViewFrame> pair = PixelPair(1, 1);
  const std::vector<ViewFrame> one(pair.begin(), pair.begin() + 1);
  EXPECT_EQ(ThrownCode([&] { Check(one); }), ErrorCode::kTooFewViews);
  FilterConfig cfg;
  cfg.tau = 1.0;
  EXPECT_TRUE(ThrownCode([&] { Check(pair, cfg); }));
  cfg.tau = 0.0;
  EXPECT_TRUE(ThrownCode([&] { Check(pair, cfg); }));
  cfg = {};
  cfg.min_violations = 0;
  EXPECT_TRUE(ThrownCode([&] { Check(pair, cfg); }));
  const std::vector<PointMap> maps = UnprojectAll(one);
  EXPECT_EQ(ThrownCode([&] { ConsistencyMasks(maps, pair, {}); }),
            ErrorCode::kLengthMismatch);
}

// Per-point rule written out with scalar arithmetic.
std::vector<BoolMask> OracleMasks(const std::vector<ViewFrame>& frames,
                                  const FilterConfig& cfg) {
  std::vector<BoolMask> out;
  for (size_t i = 0; i < frames.size(); ++i) {
    const ViewFrame& f = frames[i];
    BoolMask mask = MakeMask(f.width(), f.height());
    for (int v = 0; v < f.height(); ++v) {
      for (int u = 0; u < f.width(); ++u) {
        const double z = f.depth.at(u, v);
        if (!(z > 0)) continue;
        const CameraIntrinsics& k = f.intrinsics;
        const Eigen::Vector3d xc((u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy,
                                 z);
        const Eigen::Vector3d xw = f.pose.rotation * xc + f.pose.translation;
        int obs = 0, bad = 0;
        for (size_t j = 0; j < frames.size(); ++j) {
          if (j == i) continue;
          const ViewFrame& g = frames[j];
          const Eigen::Vector3d y =
              g.pose.rotation.transpose() * (xw - g.pose.translation);
          if (y.z() <= 1e-6) continue;
          const long px = std::lround(g.intrinsics.fx * y.x() / y.z() +
                                      g.intrinsics.cx);
          const long py = std::lround(g.intrinsics.fy * y.y() / y.z() +
                                      g.intrinsics.cy);
          if (px < 0 || py < 0 || px >= g.width() || py >= g.height()) continue;
          const double native = g.depth.at(px, py);
          if (!(native > 0)) continue;
          ++obs;
          bad += y.z() < cfg.tau * native;
        }
        mask.at(u, v) = !(bad >= cfg.min_violations &&
                          obs >= cfg.min_observations);
      }
    }
    out.push_back(std::move(mask));
  }
  return out;
}

// Views sharing one optical center, rotated by a few degrees, so every
// point lands in the others and rescaling a point along its ray keeps its
// landing pixel.
std::vector<ViewFrame> RandomConcentricViews(Rng& rng, int n) {
  const Eigen::Vector3d center = rng.Vec3(-1, 1);
  std::vector<ViewFrame> frames;
  for (int i = 0; i < n; ++i) {
    const CameraIntrinsics k = Intrinsics(20, 7.5, 5.5, 16, 12);
    CameraPose pose;
    pose.rotation = Eigen::AngleAxisd(rng.Uniform(-0.15, 0.15),
                                      rng.Vec3(-1, 1).normalized())
                        .toRotationMatrix();
    pose.translation = center;
    DepthImage depth(16, 12);
    for (float& z : depth.raw()) {
      z = rng.Bernoulli(0.1) ? 0.0f : static_cast<float>(rng.Uniform(1, 4));
    }
    frames.push_back(MakeFrame(SynthViewId(i), k, pose, depth));
  }
  return frames;
}

TEST(ConsistencyProperty, MatchesScalarOracle) {
  Rng rng(21);
  for (int trial = 0; trial < 25; ++trial) {
    const std::vector<ViewFrame> frames =
        RandomConcentricViews(rng, rng.Int(2, 5));
    FilterConfig cfg;
    cfg.tau = rng.Uniform(0.3, 0.95);
    cfg.min_violations = rng.Int(1, 2);
    cfg.min_observations = rng.Int(1, 3);
    const ConsistencyReport r = Check(frames, cfg);
    const std::vector<BoolMask> expected = OracleMasks(frames, cfg);
    for (size_t i = 0; i < frames.size(); ++i) {
      EXPECT_EQ(r.views[i].valid, expected[i]) << "trial " << trial;
      EXPECT_LE(r.views[i].flagged, r.views[i].tested);
      EXPECT_LE(r.views[i].tested, r.views[i].points);
    }
  }
}

std::vector<size_t> FlaggedIndices(const ConsistencyReport& r,
                                   const std::vector<ViewFrame>& frames) {
  std::vector<size_t> out;
  size_t base = 0;
  for (size_t i = 0; i < frames.size(); ++i) {
    for (size_t p = 0; p < frames[i].depth.num_pixels(); ++p) {
      if (frames[i].depth.raw()[p] > 0 && !r.views[i].valid.raw()[p]) {
        out.push_back(base + p);
      }
    }
    base += frames[i].depth.num_pixels();
  }
  return out;
}

bool IsSubset(const std::vector<size_t>& a, const std::vector<size_t>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

TEST(ConsistencyProperty, TauMonotone) {
  Rng rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<ViewFrame> frames = RandomConcentricViews(rng, 4);
    FilterConfig lo, hi;
    lo.tau = rng.Uniform(0.2, 0.9);
    hi.tau = rng.Uniform(lo.tau, 0.95);
    EXPECT_TRUE(IsSubset(FlaggedIndices(Check(frames, lo), frames),
                         FlaggedIndices(Check(frames, hi), frames)));
  }
}

// Pushing a view's points farther along their rays raises their depth in
// every other camera, so none of them can gain a violation; raising the
// native depth of the other views can only add violations.
TEST(ConsistencyProperty, OneSided) {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<ViewFrame> frames = RandomConcentricViews(rng, 4);
    const size_t i = rng.Int(0, 3);
    const double s = rng.Uniform(1.01, 1.5);
    const ConsistencyReport base = Check(frames);

    std::vector<ViewFrame> farther = frames;
    for (float& z : farther[i].depth.raw()) z = static_cast<float>(z * s);
    const ConsistencyReport r1 = Check(farther);
    for (size_t p = 0; p < frames[i].depth.num_pixels(); ++p) {
      if (base.views[i].valid.raw()[p]) EXPECT_TRUE(r1.views[i].valid.raw()[p]);
    }

    std::vector<ViewFrame> deeper = frames;
    for (size_t j = 0; j < deeper.size(); ++j) {
      if (j == i) continue;
      for (float& z : deeper[j].depth.raw()) z = static_cast<float>(z * s);
    }
    const ConsistencyReport r2 = Check(deeper);
    for (size_t p = 0; p < frames[i].depth.num_pixels(); ++p) {
      if (!base.views[i].valid.raw()[p]) {
        EXPECT_FALSE(r2.views[i].valid.raw()[p]);
      }
    }
  }
}

TEST(ConsistencyScene, CleanRoomFlagsNothing) {
  const SynthScene scene = GenerateScene(SynthConfig{});
  const std::vector<PointMap> maps = UnprojectAll(scene.bundle.frames);
  for (double tau : {0.25, 0.5, 0.75}) {
    FilterConfig cfg;
    cfg.tau = tau;
    const ConsistencyReport r = ConsistencyMasks(maps, scene.bundle.frames, cfg);
    EXPECT_EQ(r.TotalFlagged(), 0u) << "tau " << tau;
    size_t tested = 0;
    for (const ViewConsistency& v : r.views) tested += v.tested;
    EXPECT_GT(tested, 0u);
  }
}

TEST(ConsistencyScene, InjectedFloatersAreFlagged) {
  SynthConfig cfg;
  cfg.floater_fraction = 0.05;
  const SynthScene scene = GenerateScene(cfg);
  const ConsistencyReport r =
      ConsistencyMasks(UnprojectAll(scene.bundle.frames), scene.bundle.frames,
                       FilterConfig{});
  size_t floaters = 0, caught = 0, inliers = 0, false_flags = 0;
  for (size_t i = 0; i < scene.bundle.frames.size(); ++i) {
    const ViewFrame& f = scene.bundle.frames[i];
    for (size_t p = 0; p < f.depth.num_pixels(); ++p) {
      if (!(f.depth.raw()[p] > 0)) continue;
      const bool flagged = !r.views[i].valid.raw()[p];
      if (scene.floaters[i].raw()[p]) {
        ++floaters;
        caught += flagged;
      } else {
        ++inliers;
        false_flags += flagged;
      }
    }
  }
  ASSERT_GT(floaters, 0u);
  EXPECT_GE(caught, 0.99 * floaters) << caught << " / " << floaters;
  EXPECT_LE(false_flags, 0.01 * inliers) << false_flags << " / " << inliers;
}

ConsistencyReport AllValid(const ScenePointCloud& cloud, int w, int h) {
  ConsistencyReport r;
  for (const std::string& id : cloud.view_ids) {
    ViewConsistency v;
    v.view_id = id;
    v.valid = MakeMask(w, h, 1);
    r.views.push_back(std::move(v));
  }
  return r;
}

ScenePointCloud GridCloud(int views, int w, int h) {
  ScenePointCloud c;
  for (int i = 0; i < views; ++i) c.view_ids.push_back(SynthViewId(i));
  for (int i = 0; i < views; ++i) {
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        c.PushBack({double(u), double(v), double(i + 1)},
                   {uint8_t(u), uint8_t(v), uint8_t(i)}, {i, u, v});
      }
    }
  }
  return c;
}

TEST(FilterCloud, AllValidIsIdentity) {
  const ScenePointCloud c = GridCloud(3, 4, 2);
  EXPECT_EQ(FilterCloud(c, AllValid(c, 4, 2)), c);
}

TEST(FilterCloud, FlaggedViewDisappears) {
  const ScenePointCloud c = GridCloud(4, 3, 3);
  ConsistencyReport r = AllValid(c, 3, 3);
  r.views[2].valid.Fill(0);
  const ScenePointCloud out = FilterCloud(c, r);
  EXPECT_EQ(out.size(), c.size() - 9);
  for (const PointSource& s : out.sources) EXPECT_NE(s.view, 2);
  EXPECT_EQ(c.view_ids[2], "v02");
}

TEST(FilterCloud, CountsAndOrder) {
  const ScenePointCloud c = GridCloud(1, 8, 1);
  ConsistencyReport r = AllValid(c, 8, 1);
  for (int u : {1, 4, 6}) r.views[0].valid.at(u, 0) = 0;
  const ScenePointCloud out = FilterCloud(c, r);
  ASSERT_EQ(out.size(), 5u);
  std::vector<int> us;
  for (const PointSource& s : out.sources) us.push_back(s.u);
  EXPECT_EQ(us, (std::vector<int>{0, 2, 3, 5, 7}));
  EXPECT_EQ(FilterCloud(out, r), out);
}

TEST(FilterCloud, IdempotentOnRandomReports) {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const ScenePointCloud c = GridCloud(rng.Int(1, 4), 5, 4);
    ConsistencyReport r = AllValid(c, 5, 4);
    for (ViewConsistency& v : r.views) {
      for (uint8_t& b : v.valid.raw()) b = rng.Bernoulli(0.7);
    }
    const ScenePointCloud once = FilterCloud(c, r);
    EXPECT_EQ(FilterCloud(once, r), once);
  }
}

TEST(FilterCloud, SourceMismatch) {
  const ScenePointCloud c = GridCloud(2, 2, 2);
  ConsistencyReport r = AllValid(c, 2, 2);
  r.views[1].view_id = "zz";
  EXPECT_EQ(ThrownCode([&] { FilterCloud(c, r); }), ErrorCode::kSourceMismatch);
  r = AllValid(c, 1, 1);
  EXPECT_EQ(ThrownCode([&] { FilterCloud(c, r); }), ErrorCode::kSourceMismatch);
  r.views.pop_back();
  EXPECT_EQ(ThrownCode([&] { FilterCloud(c, r); }), ErrorCode::kSourceMismatch);
}

TEST(ApplyConsistency, IntersectsValidity) {
  const std::vector<ViewFrame> frames = PixelPair(1.0f, 2.0f);
  const std::vector<PointMap> maps = UnprojectAll(frames);
  const std::vector<PointMap> out = ApplyConsistency(maps, Check(frames));
  EXPECT_FALSE(out[0].valid.at(0, 0));
  EXPECT_TRUE(out[1].valid.at(0, 0));
}

}  // namespace
}  // namespace pointscene
