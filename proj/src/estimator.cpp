#include "monotraj/estimator.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "monotraj/error.hpp"

namespace monotraj {

namespace {

void require_min_observations(std::size_t n, int order) {
  const int need = min_observations(order);
  if (static_cast<long>(n) < need) {
    throw Error(ErrorCode::too_few_observations,
                "order " + std::to_string(order) + " needs at least " +
                    std::to_string(need) + " observations, got " + std::to_string(n),
                need);
  }
}

void require_full_rank(const StackedSystem& s) {
  if (!s.full_rank()) {
    throw Error(ErrorCode::rank_deficient,
                "design matrix has rank " + std::to_string(s.design_rank) +
                    ", need " + std::to_string(s.cols()),
                s.design_rank);
  }
}

Eigen::VectorXd least_squares_coefficients(const StackedSystem& s) {
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(s.a_matrix);
  Eigen::VectorXd beta = qr.solve(s.b_vector);
  if (!beta.allFinite()) {
    throw Error(ErrorCode::numerical_failure, "least-squares solve produced non-finite values");
  }
  return beta;
}

SolveReport make_report(const StackedSystem& s, const Eigen::VectorXd& beta,
                        SolveMethod method, double r) {
  SolveReport rep;
  rep.local_trajectory = PolynomialTrajectory::unflatten(beta, s.order);
  rep.trajectory = to_global_time(rep.local_trajectory, s.time_map);
  rep.time_map = s.time_map;
  rep.method = method;
  rep.ridge_param = r;
  rep.residual_norm = (s.a_matrix * beta - s.b_vector).norm();
  rep.condition_number = s.condition_number;
  rep.design_rank = s.design_rank;
  rep.order_selected = s.order;
  rep.ray_errors = sight_ray_errors(s.observations, rep);
  double obj = 0.0;
  for (double e : rep.ray_errors) obj += e * e;
  rep.objective = obj;
  return rep;
}

}  // namespace

std::string_view to_string(SolveMethod m) {
  return m == SolveMethod::least_squares ? "ls" : "ridge";
}

SolveMethod parse_solve_method(std::string_view s) {
  if (s == "ls" || s == "least_squares") return SolveMethod::least_squares;
  if (s == "ridge") return SolveMethod::ridge;
  throw Error(ErrorCode::invalid_input, "unknown method '" + std::string(s) + "'");
}

StackedSystem assemble_system(std::span<const Observation> observations, int order,
                              const SolveOptions& options) {
  if (order < 0) throw Error(ErrorCode::invalid_input, "order must be nonnegative");
  if (observations.empty()) {
    throw Error(ErrorCode::too_few_observations, "no observations", min_observations(order));
  }

  StackedSystem s;
  s.order = order;
  s.observations.reserve(observations.size());
  s.times.reserve(observations.size());
  for (const auto& o : observations) {
    s.observations.push_back(make_observation(o.time, o.camera_center, o.ray, o.image_point));
    s.times.push_back(o.time);
  }
  s.time_map = options.normalize_time ? TimeMap::unit_interval(s.times) : TimeMap::identity();

  const Eigen::Index n_obs = static_cast<Eigen::Index>(observations.size());
  const int n = order + 1;
  s.a_matrix.resize(3 * n_obs, 3 * n);
  s.b_vector.resize(3 * n_obs);
  for (Eigen::Index i = 0; i < n_obs; ++i) {
    const Observation& o = s.observations[i];
    const Mat3 v = ResidualProjector(o.ray).matrix();
    const Eigen::MatrixXd theta = design_block(order, s.time_map.to_local(o.time));
    s.a_matrix.middleRows(3 * i, 3) = v * theta;
    s.b_vector.segment<3>(3 * i) = v * o.camera_center;
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(s.a_matrix);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > options.rank_tolerance * smax && sv(i) > 0.0) ++rank;
  }
  s.design_rank = rank;
  const double smin = sv.size() == s.cols() ? sv(sv.size() - 1) : 0.0;
  s.condition_number = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  return s;
}

std::vector<double> sight_ray_errors(std::span<const Observation> observations,
                                     const SolveReport& report) {
  std::vector<double> errs;
  errs.reserve(observations.size());
  for (const auto& o : observations) {
    const Vec3 d = report.position_at(o.time) - o.camera_center;
    const double n = d.norm();
    if (!(n > 0.0)) {
      throw Error(ErrorCode::degenerate_geometry,
                  "estimated position coincides with camera center at t=" +
                      std::to_string(o.time));
    }
    errs.push_back((d / n - o.ray).norm());
  }
  return errs;
}

SolveReport solve_least_squares(const StackedSystem& system) {
  require_min_observations(system.observations.size(), system.order);
  require_full_rank(system);
  return make_report(system, least_squares_coefficients(system), SolveMethod::least_squares, 0.0);
}

double hkb_ridge_parameter(const StackedSystem& system, const Eigen::VectorXd& ls_coeffs) {
  const double n = static_cast<double>(system.rows());
  const double t = static_cast<double>(system.cols());
  if (n <= t) {
    throw Error(ErrorCode::insufficient_dof,
                "ridge parameter needs more equations (" + std::to_string(system.rows()) +
                    ") than unknowns (" + std::to_string(system.cols()) + ")");
  }
  const Eigen::VectorXd fitted = system.a_matrix * ls_coeffs;
  const double residual = (system.b_vector - fitted).norm();

  // Residual indistinguishable from rounding: the system is consistent.
  const double eps = std::numeric_limits<double>::epsilon();
  const double floor = 16.0 * eps * std::sqrt(n) *
                       (system.a_matrix.norm() * ls_coeffs.norm() + system.b_vector.norm());
  if (residual <= floor) return 0.0;

  const double energy = fitted.squaredNorm();
  if (energy == 0.0) {
    throw Error(ErrorCode::division_by_zero, "least-squares solution has zero energy");
  }
  const double delta0_sq = residual * residual / (n - t);
  return t * delta0_sq / energy;
}

Eigen::VectorXd ridge_coefficients(const StackedSystem& system, double r, RidgeSign sign) {
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw Error(ErrorCode::invalid_input, "ridge parameter must be finite and nonnegative");
  }
  const Eigen::MatrixXd& a = system.a_matrix;
  const double signed_r = sign == RidgeSign::standard ? r : -r;
  Eigen::MatrixXd normal = a.transpose() * a;
  normal.diagonal().array() += signed_r;
  const Eigen::VectorXd rhs = a.transpose() * system.b_vector;

  Eigen::VectorXd beta;
  if (sign == RidgeSign::standard) {
    const Eigen::LLT<Eigen::MatrixXd> llt(normal);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::rank_deficient, "regularized normal matrix is not positive definite",
                  system.design_rank);
    }
    beta = llt.solve(rhs);
  } else {
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(normal);
    if (!lu.isInvertible()) {
      throw Error(ErrorCode::rank_deficient, "regularized normal matrix is singular",
                  system.design_rank);
    }
    beta = lu.solve(rhs);
  }
  if (!beta.allFinite()) {
    throw Error(ErrorCode::numerical_failure, "ridge solve produced non-finite values");
  }
  return beta;
}

SolveReport solve_ridge(const StackedSystem& system, RidgeSign sign) {
  require_min_observations(system.observations.size(), system.order);
  require_full_rank(system);
  const Eigen::VectorXd ls = least_squares_coefficients(system);
  const double r = hkb_ridge_parameter(system, ls);
  // With r == 0 the regularizer vanishes; keep the orthogonal-factorization
  // solution rather than re-solving through the squared normal matrix.
  const Eigen::VectorXd beta = r == 0.0 ? ls : ridge_coefficients(system, r, sign);
  return make_report(system, beta, SolveMethod::ridge, r);
}

SolveReport solve(std::span<const Observation> observations, int order, SolveMethod method,
                  const SolveOptions& options) {
  require_min_observations(observations.size(), order);
  const StackedSystem system = assemble_system(observations, order, options);
  return method == SolveMethod::least_squares ? solve_least_squares(system)
                                              : solve_ridge(system, options.ridge_sign);
}

SolveReport select_order(std::span<const Observation> observations,
                         std::span<const int> candidate_orders, SolveMethod method,
                         const SolveOptions& options) {
  if (candidate_orders.empty()) {
    throw Error(ErrorCode::invalid_input, "no candidate orders");
  }
  std::vector<int> orders(candidate_orders.begin(), candidate_orders.end());
  std::sort(orders.begin(), orders.end());
  orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
  if (orders.front() < 0) throw Error(ErrorCode::invalid_input, "candidate orders must be >= 0");

  // Objectives closer than this are ties; the absolute floor absorbs rounding
  // noise on exactly representable data.
  const double abs_tie = 1e-16 * static_cast<double>(observations.size());

  std::vector<CandidateOutcome> outcomes;
  std::optional<SolveReport> best;
  std::optional<Error> first_error;
  for (int k : orders) {
    CandidateOutcome c;
    c.order = k;
    if (static_cast<long>(observations.size()) < min_observations(k)) {
      c.status = CandidateOutcome::Status::skipped;
      c.note = "needs " + std::to_string(min_observations(k)) + " observations";
      outcomes.push_back(c);
      continue;
    }
    try {
      SolveReport rep = solve(observations, k, method, options);
      c.objective = rep.objective;
      const bool better =
          !best || rep.objective < best->objective -
                                       std::max(1e-12 * std::max(rep.objective, best->objective),
                                                abs_tie);
      if (better) best = std::move(rep);
    } catch (const Error& e) {
      c.status = CandidateOutcome::Status::disqualified;
      c.note = std::string(to_string(e.code())) + ": " + e.what();
      if (!first_error) first_error = e;
    }
    outcomes.push_back(c);
  }

  if (!best) {
    if (first_error) throw *first_error;
    throw Error(ErrorCode::too_few_observations,
                "no candidate order has enough observations (smallest needs " +
                    std::to_string(min_observations(orders.front())) + ")",
                min_observations(orders.front()));
  }
  best->candidates = std::move(outcomes);
  return *best;
}

}  // namespace monotraj
