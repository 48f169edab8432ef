#include "pointscene/synthetic.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>

#include "pointscene/error.h"
#include "pointscene/io.h"
#include "pointscene/parallel.h"

namespace pointscene {
namespace {

// Portable uniform draws; std::uniform_real_distribution is not specified
// bit-exactly across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}
  double Uniform(double lo, double hi) {
    const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * unit;
  }
  uint64_t Next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  int surface = kSurfaceSky;
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
};

void IntersectRoom(const SynthConfig& cfg, const Eigen::Vector3d& o,
                   const Eigen::Vector3d& d, Hit& hit) {
  const double l = cfg.half_extent;
  if (d.z() < 0) {
    const double t = -o.z() / d.z();
    const Eigen::Vector3d p = o + t * d;
    if (t > 0 && t < hit.t && std::abs(p.x()) <= l && std::abs(p.y()) <= l) {
      hit = {t, kSurfaceFloor, p};
    }
  }
  // Walls: +x, -x, +y, -y.
  for (int w = 0; w < 4; ++w) {
    const int axis = w / 2;
    const double plane = (w % 2 == 0) ? l : -l;
    if (d(axis) == 0) continue;
    const double t = (plane - o(axis)) / d(axis);
    if (!(t > 0 && t < hit.t)) continue;
    const Eigen::Vector3d p = o + t * d;
    if (std::abs(p(1 - axis)) <= l && p.z() >= 0 && p.z() <= cfg.wall_height) {
      hit = {t, kSurfaceWallFirst + w, p};
    }
  }
}

void IntersectBox(const SynthBox& box, int surface, const Eigen::Vector3d& o,
                  const Eigen::Vector3d& d, Hit& hit) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  // World to box-local: rotate by -yaw about z around the box center.
  const auto local = [&](const Eigen::Vector3d& v, bool is_point) {
    const double x = is_point ? v.x() - box.center.x() : v.x();
    const double y = is_point ? v.y() - box.center.y() : v.y();
    return Eigen::Vector3d(c * x + s * y, -s * x + c * y, v.z());
  };
  const Eigen::Vector3d lo = local(o, true);
  const Eigen::Vector3d ld = local(d, false);
  const Eigen::Vector3d lower(-box.half_size.x(), -box.half_size.y(), 0.0);
  const Eigen::Vector3d upper(box.half_size.x(), box.half_size.y(), box.height);
  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (ld(a) == 0) {
      if (lo(a) < lower(a) || lo(a) > upper(a)) return;
      continue;
    }
    double t0 = (lower(a) - lo(a)) / ld(a);
    double t1 = (upper(a) - lo(a)) / ld(a);
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
  }
  if (t_enter <= t_exit && t_enter > 0 && t_enter < hit.t) {
    hit = {t_enter, surface, o + t_enter * d};
  }
}

uint8_t Clamp8(double v) {
  return static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

Rgb8 Shade(int surface, const Eigen::Vector3d& p) {
  const auto checker = [](double a, double b, double cell) {
    return (static_cast<long>(std::floor(a / cell)) +
            static_cast<long>(std::floor(b / cell))) & 1;
  };
  if (surface == kSurfaceFloor) {
    const double k = checker(p.x(), p.y(), 0.25) ? 1.0 : 0.7;
    return {Clamp8(180 * k + 10 * p.x()), Clamp8(165 * k + 10 * p.y()),
            Clamp8(140 * k)};
  }
  if (surface < kSurfaceBoxFirst) {
    const int w = surface - kSurfaceWallFirst;
    const double along = (w / 2 == 0) ? p.y() : p.x();
    const double k = checker(along, p.z(), 0.4) ? 1.0 : 0.8;
    static constexpr double kBase[4][3] = {
        {200, 120, 110}, {110, 190, 120}, {120, 130, 200}, {200, 190, 110}};
    return {Clamp8(kBase[w][0] * k), Clamp8(kBase[w][1] * k),
            Clamp8(kBase[w][2] * k + 20 * p.z())};
  }
  const int obj = surface - kSurfaceBoxFirst;
  const double hue = std::fmod(obj * 0.618034, 1.0) * 2 * std::numbers::pi;
  const double k = checker(p.x() + p.z(), p.y() - p.z(), 0.08) ? 1.0 : 0.75;
  return {Clamp8((128 + 100 * std::cos(hue)) * k),
          Clamp8((128 + 100 * std::cos(hue + 2.094)) * k),
          Clamp8((128 + 100 * std::cos(hue + 4.189)) * k)};
}

CameraIntrinsics SynthIntrinsics(const SynthConfig& cfg) {
  CameraIntrinsics k;
  k.fx = k.fy = cfg.focal;
  k.cx = (cfg.width - 1) / 2.0;
  k.cy = (cfg.height - 1) / 2.0;
  k.width = cfg.width;
  k.height = cfg.height;
  return k;
}

Camera RingCamera(const SynthConfig& cfg, double angle, double height,
                  const Eigen::Vector3d& target) {
  const Eigen::Vector3d eye(cfg.ring_radius * std::cos(angle),
                            cfg.ring_radius * std::sin(angle), height);
  Camera cam;
  cam.intrinsics = SynthIntrinsics(cfg);
  cam.pose.rotation = LookAtRotation(eye, target, Eigen::Vector3d::UnitZ());
  cam.pose.translation = eye;
  return cam;
}

std::vector<SynthBox> SampleBoxes(const SynthConfig& cfg, Rng& rng) {
  std::vector<SynthBox> boxes;
  int guard = 0;
  while (static_cast<int>(boxes.size()) < cfg.num_objects) {
    PS_CHECK(++guard < 10000, ErrorCode::kInvalidArgument,
             "cannot place boxes without overlap");
    SynthBox b;
    b.center = {rng.Uniform(-cfg.object_radius, cfg.object_radius),
                rng.Uniform(-cfg.object_radius, cfg.object_radius)};
    b.half_size = {rng.Uniform(cfg.box_size_min, cfg.box_size_max) / 2,
                   rng.Uniform(cfg.box_size_min, cfg.box_size_max) / 2};
    b.yaw = rng.Uniform(0.0, std::numbers::pi / 2);
    b.height = rng.Uniform(cfg.box_height_min, cfg.box_height_max);
    if (b.center.norm() > cfg.object_radius) continue;
    const bool clear = std::all_of(boxes.begin(), boxes.end(), [&](const auto& o) {
      return (o.center - b.center).norm() >
             o.half_size.norm() + b.half_size.norm() + 0.15;
    });
    if (clear) boxes.push_back(b);
  }
  return boxes;
}

// Every visible object covers 0 or >= min_visible_pixels, and object pixels
// only border floor or the same object within two pixels.
bool AcceptableView(const SynthConfig& cfg, const RayCastView& view) {
  std::vector<int> area(cfg.num_objects, 0);
  const LabelImage& s = view.surface;
  for (int y = 0; y < s.height(); ++y) {
    for (int x = 0; x < s.width(); ++x) {
      const int id = s.at(x, y);
      if (id < kSurfaceBoxFirst) continue;
      ++area[id - kSurfaceBoxFirst];
      for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
          if (!s.InBounds(x + dx, y + dy)) continue;
          const int other = s.at(x + dx, y + dy);
          if (other != id && other != kSurfaceFloor) return false;
        }
      }
    }
  }
  return std::all_of(area.begin(), area.end(), [&](int a) {
    return a == 0 || a >= cfg.min_visible_pixels;
  });
}

}  // namespace

void SynthConfig::Validate() const {
  PS_CHECK(num_views >= 2, ErrorCode::kInvalidArgument, "synth: views >= 2");
  PS_CHECK(num_objects >= 0, ErrorCode::kInvalidArgument,
           "synth: objects >= 0");
  PS_CHECK(num_test_views >= 0, ErrorCode::kInvalidArgument,
           "synth: test views >= 0");
  PS_CHECK(width >= 16 && height >= 16 && focal > 0,
           ErrorCode::kInvalidArgument, "synth: bad image size or focal");
  PS_CHECK(floater_fraction >= 0 && floater_fraction < 1,
           ErrorCode::kInvalidArgument, "synth: floater fraction in [0,1)");
  PS_CHECK(floater_depth_ratio > 0 && floater_depth_ratio < 1,
           ErrorCode::kInvalidArgument, "synth: floater depth ratio in (0,1)");
  PS_CHECK(camera_height_min > 0 && camera_height_max >= camera_height_min,
           ErrorCode::kInvalidArgument, "synth: bad camera height range");
  PS_CHECK(ring_radius < half_extent && object_radius < half_extent,
           ErrorCode::kInvalidArgument, "synth: layout exceeds the room");
  if (offset) {
    PS_CHECK(offset->scale > 0, ErrorCode::kInvalidArgument,
             "synth: offset scale > 0");
  }
}

std::string SynthViewId(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "v%02d", index);
  return buf;
}

std::string SynthTestViewId(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "t%02d", index);
  return buf;
}

RayCastView RayCast(const SynthConfig& cfg, std::span<const SynthBox> boxes,
                    const Camera& camera) {
  const CameraIntrinsics& k = camera.intrinsics;
  RayCastView out{DepthImage(k.width, k.height, 1, 0.0f),
                  LabelImage(k.width, k.height, 1, kSurfaceSky),
                  MakeRgb(k.width, k.height)};
  const Eigen::Vector3d& o = camera.pose.translation;
  ParallelFor(static_cast<size_t>(k.height), [&](size_t row) {
    const int v = static_cast<int>(row);
    for (int u = 0; u < k.width; ++u) {
      // Unit camera-space z, so the ray parameter is the z-depth.
      const Eigen::Vector3d d =
          camera.pose.rotation *
          Eigen::Vector3d((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
      Hit hit;
      IntersectRoom(cfg, o, d, hit);
      for (size_t b = 0; b < boxes.size(); ++b) {
        IntersectBox(boxes[b], kSurfaceBoxFirst + static_cast<int>(b), o, d,
                     hit);
      }
      if (hit.surface == kSurfaceSky) continue;
      out.depth.at(u, v) = static_cast<float>(hit.t);
      out.surface.at(u, v) = hit.surface;
      const Rgb8 c = Shade(hit.surface, hit.point);
      for (int ch = 0; ch < 3; ++ch) out.rgb.at(u, v, ch) = c[ch];
    }
  });
  return out;
}

LabelImage SynthScene::ObjectLabels(size_t view) const {
  const LabelImage& s = views.at(view).surface;
  LabelImage out(s.width(), s.height(), 1, 0);
  for (size_t i = 0; i < s.num_pixels(); ++i) {
    if (s.raw()[i] >= kSurfaceBoxFirst) {
      out.raw()[i] = s.raw()[i] - kSurfaceBoxFirst + 1;
    }
  }
  return out;
}

std::vector<int32_t> SynthScene::PointObjects(
    const ScenePointCloud& cloud) const {
  std::vector<LabelImage> labels;
  for (const std::string& id : cloud.view_ids) {
    const int idx = bundle.IndexOf(id);
    PS_CHECK(idx >= 0, ErrorCode::kUnknownView, id);
    labels.push_back(ObjectLabels(idx));
  }
  std::vector<int32_t> out(cloud.size());
  for (size_t i = 0; i < cloud.size(); ++i) {
    const PointSource& s = cloud.sources[i];
    out[i] = labels[s.view].at(s.u, s.v) - 1;
  }
  return out;
}

std::vector<uint8_t> SynthScene::PointFloaters(
    const ScenePointCloud& cloud) const {
  std::vector<int> view_of;
  for (const std::string& id : cloud.view_ids) {
    const int idx = bundle.IndexOf(id);
    PS_CHECK(idx >= 0, ErrorCode::kUnknownView, id);
    view_of.push_back(idx);
  }
  std::vector<uint8_t> out(cloud.size());
  for (size_t i = 0; i < cloud.size(); ++i) {
    const PointSource& s = cloud.sources[i];
    out[i] = floaters[view_of[s.view]].at(s.u, s.v);
  }
  return out;
}

SynthScene GenerateScene(const SynthConfig& cfg) {
  cfg.Validate();
  Rng rng(cfg.seed);
  SynthScene scene;
  scene.config = cfg;

  bool accepted = false;
  for (int attempt = 0; attempt < cfg.max_attempts && !accepted; ++attempt) {
    scene.boxes = SampleBoxes(cfg, rng);
    scene.gt_cameras.clear();
    scene.test_cameras.clear();
    const double step = 2 * std::numbers::pi / cfg.num_views;
    for (int i = 0; i < cfg.num_views; ++i) {
      const double angle = i * step + rng.Uniform(-0.1, 0.1);
      const double height =
          rng.Uniform(cfg.camera_height_min, cfg.camera_height_max);
      const Eigen::Vector3d target(rng.Uniform(-0.15, 0.15),
                                   rng.Uniform(-0.15, 0.15), 0.2);
      scene.gt_cameras.push_back(RingCamera(cfg, angle, height, target));
    }
    for (int i = 0; i < cfg.num_test_views; ++i) {
      const double angle = (i + 0.5) * 2 * std::numbers::pi /
                               std::max(cfg.num_test_views, 1) +
                           0.5 * step;
      const double height =
          0.5 * (cfg.camera_height_min + cfg.camera_height_max);
      scene.test_cameras.push_back(
          RingCamera(cfg, angle, height, Eigen::Vector3d(0, 0, 0.2)));
    }
    scene.views.clear();
    accepted = true;
    std::vector<int> seen_by(cfg.num_objects, 0);
    for (const Camera& cam : scene.gt_cameras) {
      scene.views.push_back(RayCast(cfg, scene.boxes, cam));
      if (!AcceptableView(cfg, scene.views.back())) {
        accepted = false;
        break;
      }
      std::set<int> present(scene.views.back().surface.raw().begin(),
                            scene.views.back().surface.raw().end());
      for (int o = 0; o < cfg.num_objects; ++o) {
        seen_by[o] += present.count(kSurfaceBoxFirst + o) ? 1 : 0;
      }
    }
    // Every object must be seen twice so it can be reconstructed and merged.
    accepted = accepted && std::all_of(seen_by.begin(), seen_by.end(),
                                       [](int n) { return n >= 2; });
  }
  PS_CHECK(accepted, ErrorCode::kInvalidArgument,
           "synth: no acceptable layout within " +
               std::to_string(cfg.max_attempts) + " attempts");
  for (const Camera& cam : scene.test_cameras) {
    scene.test_views.push_back(RayCast(cfg, scene.boxes, cam));
  }

  const SimilarityTransform offset = cfg.offset.value_or(SimilarityTransform{});
  scene.bundle.metadata.scene_id = "synth-" + std::to_string(cfg.seed);
  for (int i = 0; i < cfg.num_views; ++i) {
    const RayCastView& gt = scene.views[i];
    BoolMask floaters = MakeMask(cfg.width, cfg.height);
    ViewFrame f;
    f.view_id = SynthViewId(i);
    f.rgb = gt.rgb;
    f.intrinsics = scene.gt_cameras[i].intrinsics;
    f.pose = offset.MapPose(scene.gt_cameras[i].pose);
    f.depth = gt.depth;
    for (size_t px = 0; px < f.depth.num_pixels(); ++px) {
      float& z = f.depth.raw()[px];
      if (z <= 0) continue;
      if (cfg.floater_fraction > 0 &&
          rng.Uniform(0.0, 1.0) < cfg.floater_fraction) {
        z = static_cast<float>(cfg.floater_depth_ratio * z);
        floaters.raw()[px] = 1;
      }
      if (cfg.offset) z = static_cast<float>(offset.scale * z);
    }
    // Fresh mask ids per view, as an independent 2D segmenter would emit.
    std::set<int32_t> used;
    std::vector<int32_t> ids(cfg.num_objects);
    for (int32_t& id : ids) {
      do {
        id = static_cast<int32_t>(1 + rng.Next() % 65535);
      } while (!used.insert(id).second);
    }
    InstanceMask2D masks{f.view_id, LabelImage(cfg.width, cfg.height, 1, 0)};
    for (size_t px = 0; px < gt.surface.num_pixels(); ++px) {
      const int s = gt.surface.raw()[px];
      if (s >= kSurfaceBoxFirst) masks.labels.raw()[px] = ids[s - kSurfaceBoxFirst];
    }
    f.masks = std::move(masks);
    f.Validate();
    scene.floaters.push_back(std::move(floaters));
    scene.bundle.frames.push_back(std::move(f));
  }
  return scene;
}

void WriteSynthScene(const std::filesystem::path& dir, const SynthScene& scene) {
  WriteSceneBundle(dir / "bundle", scene.bundle);
  const fs::path gt = dir / "gt";
  const SynthConfig& cfg = scene.config;

  nlohmann::json boxes = nlohmann::json::array();
  for (const SynthBox& b : scene.boxes) {
    boxes.push_back({{"center", {b.center.x(), b.center.y()}},
                     {"half_size", {b.half_size.x(), b.half_size.y()}},
                     {"yaw", b.yaw},
                     {"height", b.height}});
  }
  nlohmann::json views = nlohmann::json::array();
  for (int i = 0; i < cfg.num_views; ++i) views.push_back(SynthViewId(i));
  nlohmann::json tests = nlohmann::json::array();
  for (int i = 0; i < cfg.num_test_views; ++i) {
    tests.push_back(SynthTestViewId(i));
  }
  WriteJson(gt / "synth.json",
            {{"seed", cfg.seed},
             {"width", cfg.width},
             {"height", cfg.height},
             {"focal", cfg.focal},
             {"num_objects", cfg.num_objects},
             {"floater_fraction", cfg.floater_fraction},
             {"floater_depth_ratio", cfg.floater_depth_ratio},
             {"offset", cfg.offset ? cfg.offset->ToJson() : nlohmann::json()},
             {"boxes", boxes},
             {"views", views},
             {"test_views", tests}});

  for (int i = 0; i < cfg.num_views; ++i) {
    const fs::path v = gt / "views" / SynthViewId(i);
    WriteJson(v / "camera.json", CameraToJson(scene.gt_cameras[i]));
    WriteDepthF32(v / "depth.f32", scene.views[i].depth);
    WritePngLabels16(v / "object_labels.png", scene.ObjectLabels(i));
    WritePngMask(v / "floaters.png", scene.floaters[i]);
  }
  for (int i = 0; i < cfg.num_test_views; ++i) {
    const fs::path v = gt / "test_views" / SynthTestViewId(i);
    WriteJson(v / "camera.json", CameraToJson(scene.test_cameras[i]));
    WritePngRgb(v / "rgb.png", scene.test_views[i].rgb);
  }
}

}  // namespace pointscene
