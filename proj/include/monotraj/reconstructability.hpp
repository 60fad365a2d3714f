#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include "monotraj/geometry.hpp"

namespace monotraj {

/// Positions at N times stacked time-major as (x0, y0, z0, x1, ...), the
/// row ordering of the stacked design matrix.
struct StackedTrajectory {
  Eigen::VectorXd vector;
  std::vector<double> times;

  static StackedTrajectory from_points(std::span<const double> times,
                                       std::span<const Vec3> points);

  std::size_t size() const { return times.size(); }
  Vec3 point(std::size_t i) const { return vector.segment<3>(3 * static_cast<Eigen::Index>(i)); }
  std::vector<Vec3> points() const;
};

/// Norm of the component of `traj` that no order-K temporal polynomial can
/// represent, i.e. |(I - Theta (Theta^T Theta)^-1 Theta^T) x|.
double null_space_residual(const StackedTrajectory& traj, int order);

/// eta = null_space_residual(camera) / null_space_residual(target).
/// Returns +inf when the target is expressible at `order`; throws
/// `indeterminate` when both are.
double reconstructability_index(const StackedTrajectory& camera,
                                const StackedTrajectory& target, int order);

struct DegeneracyThresholds {
  double concurrency_residual = 1e-6;  // m, mean point-to-ray distance
  double parallel_cosine = 1e-10;      // rays parallel when |li.lj| > 1 - this
  double camera_fit_relative = 1e-6;
  double rank_tolerance = 1e-10;
};

enum class DegeneracyFlag {
  rays_concurrent,
  rays_parallel,
  camera_expressible_at_K,
  rank_deficient,
};

std::string_view to_string(DegeneracyFlag flag);

struct DegeneracyReport {
  int order = 0;
  /// Least-squares common point of all rays; empty when the rays are
  /// parallel (the common point is at infinity).
  std::optional<Vec3> common_point;
  /// Mean point-to-ray distance of common_point.
  double common_point_residual = 0.0;
  /// Relative residual of fitting the camera path at orders 0..K.
  std::map<int, double> camera_order_fit;
  int design_rank = 0;
  std::set<DegeneracyFlag> flags;

  bool has(DegeneracyFlag f) const { return flags.count(f) != 0; }
  bool any() const { return !flags.empty(); }
};

/// Diagnoses the configurations in which the trajectory cannot be recovered:
/// concurrent or parallel rays, camera path expressible at the solve order,
/// and a rank-deficient design.
DegeneracyReport detect_degeneracy(std::span<const Observation> observations,
                                   int order,
                                   const DegeneracyThresholds& thresholds = {});

}  // namespace monotraj
