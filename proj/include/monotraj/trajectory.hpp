#pragma once

#include <Eigen/Core>
#include <span>

#include "monotraj/geometry.hpp"

namespace monotraj {

using CoeffMatrix = Eigen::Matrix<double, 3, Eigen::Dynamic>;

/// Per-axis temporal polynomials X(t), Y(t), Z(t) of a common order K.
/// Row 0 holds a_0..a_K, row 1 b_0..b_K, row 2 c_0..c_K.
class PolynomialTrajectory {
 public:
  explicit PolynomialTrajectory(CoeffMatrix coeffs);

  static PolynomialTrajectory constant(const Vec3& position);

  /// Rebuilds a trajectory from the axis-major flattening (a's, then b's,
  /// then c's).
  static PolynomialTrajectory unflatten(const Eigen::VectorXd& beta, int order);

  int order() const { return static_cast<int>(coeffs_.cols()) - 1; }
  const CoeffMatrix& coeffs() const { return coeffs_; }

  Vec3 eval(double t) const;
  Eigen::VectorXd flatten() const;

 private:
  CoeffMatrix coeffs_;
};

inline Vec3 eval_trajectory(const PolynomialTrajectory& traj, double t) {
  return traj.eval(t);
}

/// I_3 (x) (t^0, ..., t^K): a 3 x 3(K+1) block.
Eigen::MatrixXd design_block(int order, double t);

/// Smallest N with 2N >= 3(K+1).
int min_observations(int order);

/// Affine reparameterization u = (t - origin) / scale.
struct TimeMap {
  double origin = 0.0;
  double scale = 1.0;

  double to_local(double t) const { return (t - origin) / scale; }
  double to_global(double u) const { return origin + scale * u; }

  static TimeMap identity() { return {}; }
  /// Maps [min(times), max(times)] onto [0, 1]. Degenerates to a pure shift
  /// when all times coincide.
  static TimeMap unit_interval(std::span<const double> times);
};

/// Re-expresses a trajectory fitted in local time u as coefficients in global
/// time t, so that result.eval(t) == local.eval(map.to_local(t)).
PolynomialTrajectory to_global_time(const PolynomialTrajectory& local,
                                    const TimeMap& map);

/// Inverse of to_global_time.
PolynomialTrajectory to_local_time(const PolynomialTrajectory& global,
                                   const TimeMap& map);

}  // namespace monotraj
