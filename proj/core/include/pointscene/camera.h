#pragma once

#include <cmath>
#include <optional>
#include <string>

#include <Eigen/Core>

namespace pointscene {

// Pinhole intrinsics without skew or distortion. Pixel centers sit at
// integer coordinates.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  // Throws Error(kBadCamera) naming `who` on violation.
  void Validate(const std::string& who) const;

  friend bool operator==(const CameraIntrinsics&,
                         const CameraIntrinsics&) = default;
};

// Camera-to-world rigid transform: p_world = rotation * p_cam + translation.
// +z forward, +x right, +y down.
struct CameraPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  void Validate(const std::string& who) const;

  Eigen::Vector3d ToWorld(const Eigen::Vector3d& p_cam) const {
    return rotation * p_cam + translation;
  }
  Eigen::Vector3d ToCamera(const Eigen::Vector3d& p_world) const {
    return rotation.transpose() * (p_world - translation);
  }
  const Eigen::Vector3d& center() const { return translation; }

  friend bool operator==(const CameraPose& a, const CameraPose& b) {
    return a.rotation == b.rotation && a.translation == b.translation;
  }
};

struct Camera {
  CameraIntrinsics intrinsics;
  CameraPose pose;

  friend bool operator==(const Camera&, const Camera&) = default;
};

// Points closer than this along the optical axis are never projected.
inline constexpr double kMinProjectionDepth = 1e-6;

struct PixelProjection {
  double x = 0.0;
  double y = 0.0;
  double depth = 0.0;
};

// Continuous projection of a world point; nullopt when behind the camera.
std::optional<PixelProjection> ProjectToPixel(const CameraIntrinsics& k,
                                              const CameraPose& pose,
                                              const Eigen::Vector3d& p_world);

Eigen::Vector3d UnprojectPixel(const CameraIntrinsics& k,
                               const CameraPose& pose, double u, double v,
                               double depth);

// Nearest integer pixel, ties rounded away from zero.
inline int RoundToPixel(double coord) {
  return static_cast<int>(std::lround(coord));
}

// Camera-to-world rotation whose +z axis points from eye to target and whose
// image "up" (-y) is as close to world_up as possible.
Eigen::Matrix3d LookAtRotation(const Eigen::Vector3d& eye,
                               const Eigen::Vector3d& target,
                               const Eigen::Vector3d& world_up);

}  // namespace pointscene
