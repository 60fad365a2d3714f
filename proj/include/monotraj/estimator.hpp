#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "monotraj/geometry.hpp"
#include "monotraj/reconstructability.hpp"
#include "monotraj/trajectory.hpp"

namespace monotraj {

enum class SolveMethod { least_squares, ridge };

/// `paper_literal` solves (A^T A - rI) b = A^T B, kept for comparison only.
enum class RidgeSign { standard, paper_literal };

std::string_view to_string(SolveMethod m);
SolveMethod parse_solve_method(std::string_view s);

struct SolveOptions {
  /// Fit in u = (t - t_min) / (t_max - t_min) and map coefficients back.
  bool normalize_time = true;
  RidgeSign ridge_sign = RidgeSign::standard;
  /// Singular values below rank_tolerance * sigma_max count as zero.
  double rank_tolerance = 1e-10;
};

/// The stacked system A beta = B. Row block i is V_i Theta_i with
/// V_i = I - l_i l_i^T, evaluated at local time time_map.to_local(t_i).
struct StackedSystem {
  Eigen::MatrixXd a_matrix;
  Eigen::VectorXd b_vector;
  int order = 0;
  std::vector<double> times;
  TimeMap time_map;
  int design_rank = 0;
  double condition_number = 0.0;
  std::vector<Observation> observations;

  Eigen::Index rows() const { return a_matrix.rows(); }
  Eigen::Index cols() const { return a_matrix.cols(); }
  bool full_rank() const { return design_rank == cols(); }
};

StackedSystem assemble_system(std::span<const Observation> observations, int order,
                              const SolveOptions& options = {});

struct CandidateOutcome {
  enum class Status { evaluated, skipped, disqualified };
  int order = 0;
  Status status = Status::evaluated;
  double objective = 0.0;
  std::string note;
};

struct SolveReport {
  /// Coefficients in the caller's time base.
  PolynomialTrajectory trajectory = PolynomialTrajectory::constant(Vec3::Zero());
  /// Same trajectory in the solver's normalized time; better conditioned to
  /// evaluate when the raw times are large.
  PolynomialTrajectory local_trajectory = PolynomialTrajectory::constant(Vec3::Zero());
  TimeMap time_map;
  SolveMethod method = SolveMethod::least_squares;
  double ridge_param = 0.0;
  /// Sum over observations of |l_hat_j - l_j|^2.
  double objective = 0.0;
  std::vector<double> ray_errors;  // |l_hat_j - l_j| per observation
  double residual_norm = 0.0;      // |A beta - B|
  double condition_number = 0.0;
  int design_rank = 0;
  int order_selected = 0;
  std::vector<CandidateOutcome> candidates;
  std::optional<DegeneracyReport> degeneracy;

  Vec3 position_at(double t) const {
    return local_trajectory.eval(time_map.to_local(t));
  }
};

SolveReport solve_least_squares(const StackedSystem& system);

/// Hoerl-Kennard-Baldwin ridge parameter r = t d0^2 / (b^T A^T A b) with
/// t = 3(K+1) and d0^2 = |B - A b|^2 / (3N - t), b the least-squares
/// solution. Returns exactly 0 when the residual is at rounding level.
double hkb_ridge_parameter(const StackedSystem& system,
                           const Eigen::VectorXd& ls_coeffs);

/// Solves (A^T A + sign*r I) beta = A^T B for a given r.
Eigen::VectorXd ridge_coefficients(const StackedSystem& system, double r,
                                   RidgeSign sign = RidgeSign::standard);

SolveReport solve_ridge(const StackedSystem& system,
                        RidgeSign sign = RidgeSign::standard);

/// Assemble + solve at a fixed order.
SolveReport solve(std::span<const Observation> observations, int order,
                  SolveMethod method, const SolveOptions& options = {});

inline constexpr int kDefaultCandidateOrders[] = {0, 1, 2, 3};

/// Solves at each candidate order and keeps the one whose re-projected
/// sight-rays best match the observed ones. Ties go to the smaller order.
SolveReport select_order(std::span<const Observation> observations,
                         std::span<const int> candidate_orders, SolveMethod method,
                         const SolveOptions& options = {});

/// |l_hat_j - l_j| for every observation, where l_hat_j points from the
/// camera center to the estimated position. Throws degenerate_geometry when
/// an estimate coincides with its camera center.
std::vector<double> sight_ray_errors(std::span<const Observation> observations,
                                     const SolveReport& report);

}  // namespace monotraj
