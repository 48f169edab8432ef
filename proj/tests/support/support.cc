#include "support.h"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include <Eigen/Geometry>

namespace pointscene::testing {

namespace fs = std::filesystem;

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  const fs::path base = fs::temp_directory_path();
  std::random_device rd;
  for (;;) {
    path_ = base / ("pointscene_test_" + std::to_string(rd()) + "_" +
                    std::to_string(counter++));
    if (fs::create_directories(path_)) break;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

Eigen::Matrix3d Rng::Rotation() {
  Eigen::Vector4d q(Uniform(-1, 1), Uniform(-1, 1), Uniform(-1, 1),
                    Uniform(-1, 1));
  while (q.norm() < 1e-3) q = Eigen::Vector4d::Random();
  q.normalize();
  return Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
}

CameraIntrinsics Intrinsics(double f, double cx, double cy, int w, int h) {
  CameraIntrinsics k;
  k.fx = k.fy = f;
  k.cx = cx;
  k.cy = cy;
  k.width = w;
  k.height = h;
  return k;
}

Eigen::Matrix3d YawRotation(double degrees) {
  return Eigen::AngleAxisd(degrees * M_PI / 180.0, Eigen::Vector3d::UnitZ())
      .toRotationMatrix();
}

ViewFrame MakeFrame(const std::string& id, const CameraIntrinsics& k,
                    const CameraPose& pose, const DepthImage& depth) {
  ViewFrame f;
  f.view_id = id;
  f.intrinsics = k;
  f.pose = pose;
  f.depth = depth;
  f.rgb = RgbImage(k.width, k.height, 3, 128);
  return f;
}

RgbImage RandomRgb(Rng& rng, int w, int h) {
  RgbImage img = MakeRgb(w, h);
  for (uint8_t& v : img.raw()) v = static_cast<uint8_t>(rng.Int(0, 255));
  return img;
}

ScenePointCloud CloudFromPoints(const std::vector<Eigen::Vector3d>& points,
                                const std::vector<Rgb8>& colors) {
  ScenePointCloud cloud;
  cloud.view_ids = {"src"};
  for (size_t i = 0; i < points.size(); ++i) {
    const Rgb8 c = colors.empty() ? Rgb8{static_cast<uint8_t>(i % 251),
                                         static_cast<uint8_t>(i * 7 % 253), 9}
                                  : colors[i];
    cloud.PushBack(points[i], c,
                   {0, static_cast<int32_t>(i % 65536),
                    static_cast<int32_t>(i / 65536)});
  }
  return cloud;
}

namespace {

// Ray parameter where o + t d meets the plane n.p = offset, or +inf.
double PlaneHit(const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                const Eigen::Vector3d& n, double offset) {
  const double denom = n.dot(d);
  if (std::abs(denom) < 1e-15) return std::numeric_limits<double>::infinity();
  const double t = (offset - n.dot(o)) / denom;
  return t > 0 ? t : std::numeric_limits<double>::infinity();
}

}  // namespace

double OracleDepth(const SynthConfig& cfg, std::span<const SynthBox> boxes,
                   const Camera& camera, double x, double y) {
  const CameraIntrinsics& k = camera.intrinsics;
  const Eigen::Vector3d o = camera.pose.translation;
  const Eigen::Vector3d d =
      camera.pose.rotation *
      Eigen::Vector3d((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
  const double l = cfg.half_extent;
  const double tol = 1e-12;
  double best = std::numeric_limits<double>::infinity();
  const auto consider = [&](double t, auto&& inside) {
    if (t < best && inside(o + t * d)) best = t;
  };

  consider(PlaneHit(o, d, Eigen::Vector3d::UnitZ(), 0.0),
           [&](const Eigen::Vector3d& p) {
             return std::abs(p.x()) <= l + tol && std::abs(p.y()) <= l + tol;
           });
  for (int axis = 0; axis < 2; ++axis) {
    for (double side : {-1.0, 1.0}) {
      Eigen::Vector3d n = Eigen::Vector3d::Zero();
      n(axis) = 1.0;
      consider(PlaneHit(o, d, n, side * l), [&](const Eigen::Vector3d& p) {
        return std::abs(p(1 - axis)) <= l + tol && p.z() >= -tol &&
               p.z() <= cfg.wall_height + tol;
      });
    }
  }
  for (const SynthBox& b : boxes) {
    const Eigen::Vector3d c(b.center.x(), b.center.y(), 0.0);
    const Eigen::Vector3d e1(std::cos(b.yaw), std::sin(b.yaw), 0.0);
    const Eigen::Vector3d e2(-std::sin(b.yaw), std::cos(b.yaw), 0.0);
    const auto in_footprint = [&](const Eigen::Vector3d& p) {
      const Eigen::Vector3d q = p - c;
      return std::abs(q.dot(e1)) <= b.half_size.x() + tol &&
             std::abs(q.dot(e2)) <= b.half_size.y() + tol;
    };
    consider(PlaneHit(o, d, Eigen::Vector3d::UnitZ(), b.height), in_footprint);
    for (double side : {-1.0, 1.0}) {
      consider(PlaneHit(o, d, e1, e1.dot(c) + side * b.half_size.x()),
               [&](const Eigen::Vector3d& p) {
                 return in_footprint(p) && p.z() >= -tol &&
                        p.z() <= b.height + tol;
               });
      consider(PlaneHit(o, d, e2, e2.dot(c) + side * b.half_size.y()),
               [&](const Eigen::Vector3d& p) {
                 return in_footprint(p) && p.z() >= -tol &&
                        p.z() <= b.height + tol;
               });
    }
  }
  return best;
}

std::map<std::string, std::string> ReadTree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    files[fs::relative(entry.path(), root).generic_string()] =
        std::string(std::istreambuf_iterator<char>(in), {});
  }
  return files;
}

}  // namespace pointscene::testing
