#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "pointscene/camera.h"
#include "pointscene/error.h"
#include "pointscene/image.h"
#include "pointscene/scene_model.h"
#include "pointscene/synthetic.h"

namespace pointscene::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

// Returns the code of the Error thrown by f, nullopt when nothing is thrown.
template <typename F>
std::optional<ErrorCode> ThrownCode(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

template <typename F>
std::string ThrownDetail(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.detail();
  }
  return "";
}

// Seeded generator for property tests.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  double Uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  int Int(int lo, int hi) {  // inclusive
    return std::uniform_int_distribution<int>(lo, hi)(engine_);
  }
  bool Bernoulli(double p) { return std::bernoulli_distribution(p)(engine_); }
  Eigen::Vector3d Vec3(double lo, double hi) {
    return {Uniform(lo, hi), Uniform(lo, hi), Uniform(lo, hi)};
  }
  Eigen::Matrix3d Rotation();
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

CameraIntrinsics Intrinsics(double f, double cx, double cy, int w, int h);
Eigen::Matrix3d YawRotation(double degrees);  // about +z

// Frame with a constant-color image and the given depth.
ViewFrame MakeFrame(const std::string& id, const CameraIntrinsics& k,
                    const CameraPose& pose, const DepthImage& depth);

RgbImage RandomRgb(Rng& rng, int w, int h);

// Cloud of points without provenance meaning: every point gets a distinct
// source pixel in a single synthetic view.
ScenePointCloud CloudFromPoints(const std::vector<Eigen::Vector3d>& points,
                                const std::vector<Rgb8>& colors = {});

// Z-depth of the first scene surface along the ray through continuous pixel
// (x, y), +inf for sky. Intersects each bounded face separately.
double OracleDepth(const SynthConfig& cfg, std::span<const SynthBox> boxes,
                   const Camera& camera, double x, double y);

// Every regular file under `root`, keyed by relative path, with its bytes.
std::map<std::string, std::string> ReadTree(const std::filesystem::path& root);

}  // namespace pointscene::testing
