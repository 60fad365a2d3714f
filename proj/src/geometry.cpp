#include "monotraj/geometry.hpp"

#include <Eigen/LU>
#include <cmath>
#include <limits>

#include "monotraj/error.hpp"

namespace monotraj {

namespace {

bool all_finite(const auto& m) { return m.allFinite(); }

}  // namespace

CameraIntrinsics CameraIntrinsics::from_matrix(const Mat3& k) {
  if (!all_finite(k)) {
    throw Error(ErrorCode::invalid_input, "intrinsics contain non-finite entries");
  }
  if (k(1, 0) != 0.0 || k(2, 0) != 0.0 || k(2, 1) != 0.0) {
    throw Error(ErrorCode::invalid_input, "intrinsics must be upper triangular");
  }
  if (!(k(0, 0) > 0.0 && k(1, 1) > 0.0 && k(2, 2) > 0.0)) {
    throw Error(ErrorCode::invalid_input,
                "intrinsics diagonal must be strictly positive");
  }
  // Upper triangular with positive diagonal is always invertible.
  return CameraIntrinsics(k, k.inverse());
}

CameraIntrinsics CameraIntrinsics::from_params(double fx, double fy, double ppx,
                                               double ppy, double skew) {
  Mat3 k;
  k << fx, skew, ppx, 0.0, fy, ppy, 0.0, 0.0, 1.0;
  return from_matrix(k);
}

CameraPose CameraPose::from(const Mat3& rotation, const Vec3& center) {
  if (!all_finite(rotation) || !all_finite(center)) {
    throw Error(ErrorCode::invalid_input, "pose contains non-finite entries");
  }
  const double ortho_err =
      (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho_err > 1e-10) {
    throw Error(ErrorCode::invalid_input, "rotation is not orthonormal");
  }
  if (std::abs(rotation.determinant() - 1.0) > 1e-10) {
    throw Error(ErrorCode::invalid_input, "rotation determinant is not +1");
  }
  return CameraPose(rotation, center);
}

Vec3 normalize_ray(const Vec3& ray) {
  if (!all_finite(ray)) {
    throw Error(ErrorCode::invalid_input, "ray contains non-finite entries");
  }
  const double n = ray.norm();
  if (std::abs(n - 1.0) > kRayNormTolerance) {
    throw Error(ErrorCode::invalid_input,
                "ray is not unit length (norm " + std::to_string(n) + ")");
  }
  // Already unit up to rounding: keep the bits so that re-ingesting a
  // written ray is the identity.
  if (std::abs(n - 1.0) <= 8.0 * std::numeric_limits<double>::epsilon()) return ray;
  return ray / n;
}

Observation make_observation(double time, const Vec3& camera_center,
                             const Vec3& ray, std::optional<Vec2> image_point) {
  if (!std::isfinite(time)) {
    throw Error(ErrorCode::invalid_input, "observation time is not finite");
  }
  if (!all_finite(camera_center)) {
    throw Error(ErrorCode::invalid_input, "camera center is not finite");
  }
  return Observation{time, camera_center, normalize_ray(ray), image_point};
}

ResidualProjector::ResidualProjector(const Vec3& unit_ray)
    : m_(Mat3::Identity() - unit_ray * unit_ray.transpose()) {}

Vec3 compute_sight_ray(const CameraIntrinsics& intrinsics,
                       const CameraPose& pose, const Vec2& image_point) {
  if (!all_finite(image_point)) {
    throw Error(ErrorCode::invalid_input, "image point is not finite");
  }
  const Vec3 lifted(image_point.x(), image_point.y(), 1.0);
  const Vec3 dir = pose.rotation().transpose() * (intrinsics.inverse() * lifted);
  const double n = dir.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorCode::degenerate_geometry, "sight-ray has zero length");
  }
  return dir / n;
}

ResidualProjector residual_projector(const Vec3& ray) {
  return ResidualProjector(normalize_ray(ray));
}

double point_to_ray_distance(const Vec3& point, const Observation& obs) {
  const ResidualProjector v(obs.ray);
  return v.apply(obs.camera_center - point).norm();
}

}  // namespace monotraj
