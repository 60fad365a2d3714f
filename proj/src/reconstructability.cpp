#include "monotraj/reconstructability.hpp"

#include <Eigen/QR>
#include <cmath>
#include <limits>
#include <string>

#include "monotraj/error.hpp"
#include "monotraj/estimator.hpp"
#include "monotraj/trajectory.hpp"

namespace monotraj {

namespace {

Eigen::MatrixXd stacked_design(std::span<const double> times, int order) {
  const TimeMap map = TimeMap::unit_interval(times);
  const Eigen::Index n = static_cast<Eigen::Index>(times.size());
  Eigen::MatrixXd theta(3 * n, 3 * (order + 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    theta.middleRows(3 * i, 3) = design_block(order, map.to_local(times[i]));
  }
  return theta;
}

// Norm of x minus its orthogonal projection onto col(theta), via a
// rank-revealing QR so that rank-deficient designs still project correctly.
double projection_residual(const Eigen::MatrixXd& theta, const Eigen::VectorXd& x,
                           Eigen::Index* rank_out = nullptr) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(theta);
  qr.setThreshold(1e-10);
  const Eigen::Index rank = qr.rank();
  if (rank_out) *rank_out = rank;
  const Eigen::VectorXd qtx = qr.householderQ().transpose() * x;
  return qtx.tail(qtx.size() - rank).norm();
}

void check_stacked(const StackedTrajectory& t) {
  if (t.vector.size() != 3 * static_cast<Eigen::Index>(t.times.size())) {
    throw Error(ErrorCode::invalid_input, "stacked trajectory length must be 3 x number of times");
  }
  if (!t.vector.allFinite()) {
    throw Error(ErrorCode::invalid_input, "stacked trajectory has non-finite entries");
  }
}

}  // namespace

StackedTrajectory StackedTrajectory::from_points(std::span<const double> times,
                                                 std::span<const Vec3> points) {
  if (times.size() != points.size()) {
    throw Error(ErrorCode::invalid_input, "times and points differ in length");
  }
  StackedTrajectory s;
  s.times.assign(times.begin(), times.end());
  s.vector.resize(3 * static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    s.vector.segment<3>(3 * static_cast<Eigen::Index>(i)) = points[i];
  }
  return s;
}

std::vector<Vec3> StackedTrajectory::points() const {
  std::vector<Vec3> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(point(i));
  return out;
}

double null_space_residual(const StackedTrajectory& traj, int order) {
  check_stacked(traj);
  if (order < 0) throw Error(ErrorCode::invalid_input, "order must be nonnegative");
  const Eigen::MatrixXd theta = stacked_design(traj.times, order);
  Eigen::Index rank = 0;
  const double res = projection_residual(theta, traj.vector, &rank);
  if (rank < theta.cols()) {
    throw Error(ErrorCode::invalid_input,
                "order " + std::to_string(order) + " needs " + std::to_string(order + 1) +
                    " distinct times");
  }
  return res;
}

double reconstructability_index(const StackedTrajectory& camera,
                                const StackedTrajectory& target, int order) {
  if (camera.times != target.times) {
    throw Error(ErrorCode::time_mismatch, "camera and target sampled at different times");
  }
  const double rc = null_space_residual(camera, order);
  const double rp = null_space_residual(target, order);
  const bool target_expressible = rp <= 1e-12 * target.vector.norm();
  const bool camera_expressible = rc <= 1e-12 * camera.vector.norm();
  if (target_expressible && camera_expressible) {
    throw Error(ErrorCode::indeterminate,
                "camera and target are both expressible at order " + std::to_string(order));
  }
  if (target_expressible) return std::numeric_limits<double>::infinity();
  return rc / rp;
}

std::string_view to_string(DegeneracyFlag flag) {
  switch (flag) {
    case DegeneracyFlag::rays_concurrent: return "rays_concurrent";
    case DegeneracyFlag::rays_parallel: return "rays_parallel";
    case DegeneracyFlag::camera_expressible_at_K: return "camera_expressible_at_K";
    case DegeneracyFlag::rank_deficient: return "rank_deficient";
  }
  return "unknown";
}

DegeneracyReport detect_degeneracy(std::span<const Observation> observations, int order,
                                   const DegeneracyThresholds& thresholds) {
  if (observations.size() < 2) {
    throw Error(ErrorCode::invalid_input, "degeneracy check needs at least 2 observations");
  }
  if (order < 0) throw Error(ErrorCode::invalid_input, "order must be nonnegative");

  DegeneracyReport rep;
  rep.order = order;

  // (b) parallel rays
  bool parallel = true;
  for (std::size_t i = 0; i < observations.size() && parallel; ++i) {
    for (std::size_t j = i + 1; j < observations.size(); ++j) {
      if (std::abs(observations[i].ray.dot(observations[j].ray)) <=
          1.0 - thresholds.parallel_cosine) {
        parallel = false;
        break;
      }
    }
  }

  // (a) single-point triangulation
  Mat3 normal = Mat3::Zero();
  Vec3 rhs = Vec3::Zero();
  for (const auto& o : observations) {
    const Mat3 v = ResidualProjector(o.ray).matrix();
    normal += v;
    rhs += v * o.camera_center;
  }
  const Vec3 point = Eigen::CompleteOrthogonalDecomposition<Mat3>(normal).solve(rhs);
  double mean_residual = 0.0;
  for (const auto& o : observations) mean_residual += point_to_ray_distance(point, o);
  mean_residual /= static_cast<double>(observations.size());
  rep.common_point_residual = mean_residual;
  if (!parallel) rep.common_point = point;

  if (parallel) {
    rep.flags.insert(DegeneracyFlag::rays_parallel);
    rep.flags.insert(DegeneracyFlag::rays_concurrent);
  } else if (mean_residual < thresholds.concurrency_residual) {
    rep.flags.insert(DegeneracyFlag::rays_concurrent);
  }

  // (c) camera path expressibility at orders 0..K
  std::vector<double> times;
  std::vector<Vec3> centers;
  for (const auto& o : observations) {
    times.push_back(o.time);
    centers.push_back(o.camera_center);
  }
  const StackedTrajectory cam = StackedTrajectory::from_points(times, centers);
  const double cam_norm = cam.vector.norm();
  for (int k = 0; k <= order; ++k) {
    const double res = projection_residual(stacked_design(times, k), cam.vector);
    rep.camera_order_fit[k] = cam_norm > 0.0 ? res / cam_norm : 0.0;
  }
  if (rep.camera_order_fit[order] < thresholds.camera_fit_relative) {
    rep.flags.insert(DegeneracyFlag::camera_expressible_at_K);
  }

  // (d) rank of the stacked system
  SolveOptions opts;
  opts.rank_tolerance = thresholds.rank_tolerance;
  const StackedSystem sys = assemble_system(observations, order, opts);
  rep.design_rank = sys.design_rank;
  if (!sys.full_rank()) rep.flags.insert(DegeneracyFlag::rank_deficient);
  return rep;
}

}  // namespace monotraj
