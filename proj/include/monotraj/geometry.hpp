#pragma once

#include <Eigen/Core>
#include <optional>

namespace monotraj {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rays whose norm is within this distance of 1 are silently renormalized;
/// anything further off is rejected.
inline constexpr double kRayNormTolerance = 1e-9;

/// Pinhole intrinsics. The matrix is upper triangular with strictly positive
/// diagonal.
class CameraIntrinsics {
 public:
  static CameraIntrinsics from_matrix(const Mat3& k);
  static CameraIntrinsics from_params(double fx, double fy, double ppx,
                                      double ppy, double skew = 0.0);

  const Mat3& matrix() const { return k_; }
  const Mat3& inverse() const { return k_inv_; }

 private:
  CameraIntrinsics(const Mat3& k, const Mat3& k_inv) : k_(k), k_inv_(k_inv) {}
  Mat3 k_;
  Mat3 k_inv_;
};

/// Camera orientation and optical center. The rotation is stored exactly as
/// used in ray = R^T K^-1 p, so R^T takes camera-frame vectors to world frame.
class CameraPose {
 public:
  static CameraPose from(const Mat3& rotation, const Vec3& center);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& center() const { return center_; }

 private:
  CameraPose(const Mat3& r, const Vec3& c) : rotation_(r), center_(c) {}
  Mat3 rotation_;
  Vec3 center_;
};

/// One timestamped sighting of the target.
struct Observation {
  double time = 0.0;
  Vec3 camera_center = Vec3::Zero();
  Vec3 ray = Vec3::UnitZ();
  std::optional<Vec2> image_point;
};

/// Validates inputs and normalizes the ray (see kRayNormTolerance).
Observation make_observation(double time, const Vec3& camera_center,
                             const Vec3& ray,
                             std::optional<Vec2> image_point = std::nullopt);

/// Returns `ray` rescaled to unit length if it is already unit within
/// kRayNormTolerance; throws invalid_input otherwise.
Vec3 normalize_ray(const Vec3& ray);

/// I - l l^T for a unit sight-ray l.
class ResidualProjector {
 public:
  explicit ResidualProjector(const Vec3& unit_ray);

  const Mat3& matrix() const { return m_; }
  Vec3 apply(const Vec3& v) const { return m_ * v; }

 private:
  Mat3 m_;
};

Vec3 compute_sight_ray(const CameraIntrinsics& intrinsics,
                       const CameraPose& pose, const Vec2& image_point);

ResidualProjector residual_projector(const Vec3& ray);

/// Perpendicular distance from `point` to the observation's sight-ray line.
double point_to_ray_distance(const Vec3& point, const Observation& obs);

}  // namespace monotraj
