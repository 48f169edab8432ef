#include "pointscene/camera.h"

#include <cmath>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "pointscene/error.h"

namespace pointscene {

void CameraIntrinsics::Validate(const std::string& who) const {
  const bool ok = std::isfinite(fx) && std::isfinite(fy) && fx > 0 &&
                  fy > 0 && width >= 1 && height >= 1 && cx >= 0 &&
                  cx < width && cy >= 0 && cy < height;
  PS_CHECK(ok, ErrorCode::kBadCamera, who);
}

void CameraPose::Validate(const std::string& who) const {
  PS_CHECK(rotation.allFinite() && translation.allFinite(),
           ErrorCode::kBadCamera, who);
  const double ortho_err =
      (rotation.transpose() * rotation - Eigen::Matrix3d::Identity())
          .cwiseAbs()
          .maxCoeff();
  PS_CHECK(ortho_err <= 1e-9, ErrorCode::kBadCamera, who);
  PS_CHECK(std::abs(rotation.determinant() - 1.0) <= 1e-9,
           ErrorCode::kBadCamera, who);
}

std::optional<PixelProjection> ProjectToPixel(const CameraIntrinsics& k,
                                              const CameraPose& pose,
                                              const Eigen::Vector3d& p_world) {
  const Eigen::Vector3d p = pose.ToCamera(p_world);
  if (!(p.z() > kMinProjectionDepth)) {
    return std::nullopt;
  }
  return PixelProjection{k.fx * p.x() / p.z() + k.cx,
                         k.fy * p.y() / p.z() + k.cy, p.z()};
}

Eigen::Vector3d UnprojectPixel(const CameraIntrinsics& k,
                               const CameraPose& pose, double u, double v,
                               double depth) {
  const Eigen::Vector3d p_cam((u - k.cx) * depth / k.fx,
                              (v - k.cy) * depth / k.fy, depth);
  return pose.ToWorld(p_cam);
}

Eigen::Matrix3d LookAtRotation(const Eigen::Vector3d& eye,
                               const Eigen::Vector3d& target,
                               const Eigen::Vector3d& world_up) {
  const Eigen::Vector3d z = (target - eye).normalized();
  Eigen::Vector3d x = z.cross(world_up);
  if (x.norm() < 1e-12) {
    x = z.unitOrthogonal();
  }
  x.normalize();
  // y points "down" in the image, i.e. away from world_up.
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return r;
}

}  // namespace pointscene
