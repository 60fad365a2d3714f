#include "monotraj/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include "monotraj/error.hpp"

namespace monotraj {

namespace {

// Binomial substitution: given p(x) = sum_k c_k x^k and x = alpha + gamma*y,
// returns the coefficients d_j of p in powers of y.
CoeffMatrix substitute_affine(const CoeffMatrix& c, double alpha, double gamma) {
  const int n = static_cast<int>(c.cols());
  CoeffMatrix d = CoeffMatrix::Zero(3, n);
  // Pascal row for (alpha + gamma*y)^k, built incrementally.
  Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
  row(0) = 1.0;
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j <= k; ++j) d.col(j) += c.col(k) * row(j);
    if (k + 1 < n) {
      for (int j = k + 1; j >= 1; --j) row(j) = alpha * row(j) + gamma * row(j - 1);
      row(0) *= alpha;
    }
  }
  return d;
}

}  // namespace

PolynomialTrajectory::PolynomialTrajectory(CoeffMatrix coeffs)
    : coeffs_(std::move(coeffs)) {
  if (coeffs_.cols() < 1) {
    throw Error(ErrorCode::invalid_input, "trajectory needs at least one coefficient");
  }
  if (!coeffs_.allFinite()) {
    throw Error(ErrorCode::invalid_input, "trajectory coefficients are not finite");
  }
}

PolynomialTrajectory PolynomialTrajectory::constant(const Vec3& position) {
  return PolynomialTrajectory(CoeffMatrix(position));
}

PolynomialTrajectory PolynomialTrajectory::unflatten(const Eigen::VectorXd& beta,
                                                     int order) {
  if (order < 0 || beta.size() != 3 * (order + 1)) {
    throw Error(ErrorCode::invalid_input, "coefficient vector has wrong length");
  }
  const int n = order + 1;
  CoeffMatrix c(3, n);
  for (int axis = 0; axis < 3; ++axis) c.row(axis) = beta.segment(axis * n, n).transpose();
  return PolynomialTrajectory(std::move(c));
}

Vec3 PolynomialTrajectory::eval(double t) const {
  Vec3 acc = coeffs_.col(coeffs_.cols() - 1);
  for (Eigen::Index k = coeffs_.cols() - 2; k >= 0; --k) acc = acc * t + coeffs_.col(k);
  return acc;
}

Eigen::VectorXd PolynomialTrajectory::flatten() const {
  const Eigen::Index n = coeffs_.cols();
  Eigen::VectorXd beta(3 * n);
  for (int axis = 0; axis < 3; ++axis) beta.segment(axis * n, n) = coeffs_.row(axis).transpose();
  return beta;
}

Eigen::MatrixXd design_block(int order, double t) {
  if (order < 0) throw Error(ErrorCode::invalid_input, "order must be nonnegative");
  if (!std::isfinite(t)) throw Error(ErrorCode::invalid_input, "time is not finite");
  const int n = order + 1;
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(3, 3 * n);
  double power = 1.0;
  for (int k = 0; k < n; ++k) {
    for (int axis = 0; axis < 3; ++axis) block(axis, axis * n + k) = power;
    power *= t;
  }
  return block;
}

int min_observations(int order) {
  if (order < 0) throw Error(ErrorCode::invalid_input, "order must be nonnegative");
  return (3 * (order + 1) + 1) / 2;
}

TimeMap TimeMap::unit_interval(std::span<const double> times) {
  if (times.empty()) return identity();
  const auto [lo, hi] = std::minmax_element(times.begin(), times.end());
  const double span = *hi - *lo;
  return TimeMap{*lo, span > 0.0 ? span : 1.0};
}

PolynomialTrajectory to_global_time(const PolynomialTrajectory& local,
                                    const TimeMap& map) {
  // u = -origin/scale + t/scale
  return PolynomialTrajectory(
      substitute_affine(local.coeffs(), -map.origin / map.scale, 1.0 / map.scale));
}

PolynomialTrajectory to_local_time(const PolynomialTrajectory& global,
                                   const TimeMap& map) {
  // t = origin + scale*u
  return PolynomialTrajectory(substitute_affine(global.coeffs(), map.origin, map.scale));
}

}  // namespace monotraj
