#pragma once

#include <cstdint>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "monotraj/estimator.hpp"
#include "monotraj/geometry.hpp"
#include "monotraj/reconstructability.hpp"
#include "monotraj/trajectory.hpp"

namespace monotraj::sim {

/// X = r sin(w t), Y = r - r cos(w t), Z = h. Defaults are the circular
/// flight used throughout the synthetic experiments.
struct CirclePath {
  double radius = 100.0;
  double height = 100.0;
  double angular_rate = std::numbers::pi / 10.0;  // rad/s
};

struct LinePath {
  Vec3 origin = Vec3::Zero();
  Vec3 velocity = Vec3::UnitX();
};

/// Explicit camera positions; must cover every sample time exactly.
struct SampledPath {
  std::vector<double> times;
  std::vector<Vec3> positions;
};

using CameraPath = std::variant<CirclePath, LinePath, SampledPath>;

Vec3 camera_position(const CameraPath& path, double t);

struct TargetMotion {
  std::string name;
  PolynomialTrajectory trajectory;

  /// Highest power with a nonzero coefficient.
  int true_order() const;

  /// X = 10 + 5t, Y = 5t, Z = t
  static TargetMotion linear();
  /// X = 10 + t^2, Y = 13 + 2t^2, Z = 0.5t^2
  static TargetMotion accelerated();
  static TargetMotion preset(const std::string& name);
};

struct ScenarioSpec {
  TargetMotion target = TargetMotion::linear();
  CameraPath camera = CirclePath{};
  double frame_rate = 10.0;  // Hz
  double duration = 6.0;     // s
  double occlusion_fraction = 0.0;
  std::uint64_t seed = 0;

  /// Samples at t_j = j / frame_rate for j = 0..floor(duration * frame_rate).
  std::size_t sample_count() const;
  void validate() const;
};

struct NoiseSpec {
  double camera_pos_systematic_std = 0.0;  // m
  double camera_pos_random_std = 0.0;      // m
  double ray_angle_systematic_std = 0.0;   // deg
  double ray_angle_random_std = 0.0;       // deg

  static NoiseSpec none() { return {}; }
  static NoiseSpec high() { return {1.0, 1.0, 0.3, 0.3}; }
  static NoiseSpec low() { return {0.1, 0.1, 0.1, 0.05}; }
  static NoiseSpec preset(const std::string& name);

  void validate() const;
};

struct Scenario {
  std::vector<Observation> observations;
  StackedTrajectory truth;
  StackedTrajectory camera_truth;
};

Scenario generate_scenario(const ScenarioSpec& spec);

/// Camera centers get one systematic offset per call plus an independent
/// offset per observation. Rays are rotated about an axis orthogonal to the
/// ray by a normally distributed angle: one systematic rotation shared by
/// all observations, then an independent one per observation.
std::vector<Observation> apply_noise(std::span<const Observation> observations,
                                     const NoiseSpec& noise, std::uint64_t seed);

/// Indices (ascending) that survive removing floor(fraction * n) samples
/// chosen uniformly without replacement.
std::vector<std::size_t> occlusion_keep_indices(std::size_t n, double fraction,
                                                std::uint64_t seed,
                                                std::size_t min_remaining);

std::vector<Observation> occlude(std::span<const Observation> observations,
                                 double fraction, std::uint64_t seed,
                                 std::size_t min_remaining);

std::uint64_t splitmix64(std::uint64_t x);

/// Seed of trial i: splitmix64(master ^ i).
inline std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial) {
  return splitmix64(master ^ trial);
}

/// One Monte Carlo trial of a noise-free scenario: noise from
/// splitmix64(seed ^ noise salt), then occlusion from an independent stream.
/// Truth and camera paths are restricted to the visible times.
Scenario realize_trial(const Scenario& base, const NoiseSpec& noise, double occlusion,
                       std::uint64_t seed, std::size_t min_remaining);

// ---------------------------------------------------------------------------
// Monte Carlo experiments

struct OrderSpec {
  bool automatic = true;
  int order = 0;

  std::string label() const { return automatic ? "auto" : std::to_string(order); }
  static OrderSpec fixed(int k) { return {false, k}; }
  static OrderSpec autoselect() { return {true, 0}; }
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::vector<TargetMotion> targets{TargetMotion::linear()};
  CameraPath camera = CirclePath{};
  double frame_rate = 10.0;
  std::vector<double> windows{6.0};
  std::vector<double> occlusions{0.0};
  NoiseSpec noise = NoiseSpec::high();
  std::vector<SolveMethod> methods{SolveMethod::least_squares, SolveMethod::ridge};
  std::vector<OrderSpec> orders{OrderSpec::autoselect()};
  std::vector<int> candidate_orders{0, 1, 2, 3};
  int trials = 1000;
  std::uint64_t seed = 1;
  SolveOptions solve_options;
  /// 0 = hardware concurrency. Results do not depend on this.
  unsigned threads = 0;

  void validate() const;
};

struct MethodOutcome {
  bool ok = false;
  std::string error;  // error code when !ok
  double rms = 0.0;            // vs ground truth, at the visible times
  double rms_to_camera = 0.0;  // vs true camera path, same times
  double objective = 0.0;
  double ridge_param = 0.0;
  int selected_order = -1;
  double eta = 0.0;  // at the solved order; inf when target expressible, NaN if indeterminate
};

struct TrialResult {
  std::size_t trial = 0;
  std::string target;
  double window = 0.0;
  double occlusion = 0.0;
  std::string order_label;
  std::uint64_t seed = 0;
  std::size_t observations = 0;
  int true_order = 0;
  std::map<SolveMethod, MethodOutcome> per_method;
};

struct AggregateRow {
  std::string target;
  double window = 0.0;
  double occlusion = 0.0;
  std::string order_label;
  SolveMethod method = SolveMethod::ridge;
  int trials = 0;
  int failures = 0;
  double mean_rms = 0.0;
  double median_rms = 0.0;
  double std_rms = 0.0;
  double mean_rms_to_camera = 0.0;
  double selection_accuracy = 0.0;
  double mean_objective = 0.0;
  double mean_ridge_param = 0.0;
};

struct ExperimentReport {
  std::string name;
  std::vector<TrialResult> trials;
  std::vector<AggregateRow> rows;

  const AggregateRow* find(const std::string& target, double window, double occlusion,
                           const std::string& order_label, SolveMethod method) const;
};

/// Runs every (target, window, occlusion, order mode) cell for `trials`
/// trials. Each trial draws its noise and occlusion from trial_seed(seed, i),
/// so a trial sees the same random stream in every cell and every method
/// solves the same noisy data. Per-trial failures are counted, not thrown.
ExperimentReport run_experiment(const ExperimentConfig& config);

}  // namespace monotraj::sim
