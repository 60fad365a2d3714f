#include "monotraj/sim.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "monotraj/error.hpp"

namespace monotraj::sim {

namespace {

constexpr std::uint64_t kNoiseSalt = 0x6e6f697365ULL;      // "noise"
constexpr std::uint64_t kOcclusionSalt = 0x6f63636cULL;    // "occl"
constexpr double kDeg = std::numbers::pi / 180.0;

// Rotates unit `ray` by `angle` about unit `axis`, which must be orthogonal
// to the ray.
Vec3 rotate_orthogonal(const Vec3& ray, const Vec3& axis, double angle) {
  return ray * std::cos(angle) + axis.cross(ray) * std::sin(angle);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - mu) * (x - mu);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

double rms_distance(std::span<const Vec3> a, std::span<const Vec3> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]).squaredNorm();
  return std::sqrt(acc / static_cast<double>(a.size()));
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Vec3 camera_position(const CameraPath& path, double t) {
  return std::visit(
      [t](const auto& p) -> Vec3 {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, CirclePath>) {
          const double w = p.angular_rate * t;
          return {p.radius * std::sin(w), p.radius - p.radius * std::cos(w), p.height};
        } else if constexpr (std::is_same_v<P, LinePath>) {
          return p.origin + p.velocity * t;
        } else {
          for (std::size_t i = 0; i < p.times.size(); ++i) {
            if (std::abs(p.times[i] - t) <= 1e-9) return p.positions[i];
          }
          throw Error(ErrorCode::invalid_input,
                      "sampled camera path has no position at t=" + std::to_string(t));
        }
      },
      path);
}

int TargetMotion::true_order() const {
  const auto& c = trajectory.coeffs();
  for (Eigen::Index k = c.cols() - 1; k > 0; --k) {
    if (c.col(k).cwiseAbs().maxCoeff() > 0.0) return static_cast<int>(k);
  }
  return 0;
}

TargetMotion TargetMotion::linear() {
  CoeffMatrix c(3, 2);
  c << 10.0, 5.0,  //
      0.0, 5.0,    //
      0.0, 1.0;
  return {"linear", PolynomialTrajectory(c)};
}

TargetMotion TargetMotion::accelerated() {
  CoeffMatrix c(3, 3);
  c << 10.0, 0.0, 1.0,  //
      13.0, 0.0, 2.0,   //
      0.0, 0.0, 0.5;
  return {"accelerated", PolynomialTrajectory(c)};
}

TargetMotion TargetMotion::preset(const std::string& name) {
  if (name == "linear") return linear();
  if (name == "accelerated") return accelerated();
  throw Error(ErrorCode::config_error, "unknown target preset '" + name + "'");
}

std::size_t ScenarioSpec::sample_count() const {
  return static_cast<std::size_t>(std::floor(duration * frame_rate + 1e-9)) + 1;
}

void ScenarioSpec::validate() const {
  if (!(frame_rate > 0.0) || !std::isfinite(frame_rate)) {
    throw Error(ErrorCode::invalid_input, "frame_rate must be positive");
  }
  if (!(duration >= 0.0) || !std::isfinite(duration)) {
    throw Error(ErrorCode::invalid_input, "duration must be nonnegative");
  }
  if (duration * frame_rate < 2.0 - 1e-9) {
    throw Error(ErrorCode::invalid_input, "duration * frame_rate must be at least 2");
  }
  if (!(occlusion_fraction >= 0.0 && occlusion_fraction < 1.0)) {
    throw Error(ErrorCode::invalid_input, "occlusion_fraction must lie in [0, 1)");
  }
  const std::size_t n = sample_count();
  const auto removed = static_cast<std::size_t>(std::floor(occlusion_fraction * n));
  const int need = min_observations(target.true_order());
  if (static_cast<long>(n - removed) < need) {
    throw Error(ErrorCode::too_few_observations,
                "occlusion leaves " + std::to_string(n - removed) + " samples, need " +
                    std::to_string(need),
                need);
  }
}

NoiseSpec NoiseSpec::preset(const std::string& name) {
  if (name == "none") return none();
  if (name == "high") return high();
  if (name == "low") return low();
  throw Error(ErrorCode::config_error, "unknown noise preset '" + name + "'");
}

void NoiseSpec::validate() const {
  for (double s : {camera_pos_systematic_std, camera_pos_random_std, ray_angle_systematic_std,
                   ray_angle_random_std}) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw Error(ErrorCode::invalid_input, "noise standard deviations must be finite and >= 0");
    }
  }
}

Scenario generate_scenario(const ScenarioSpec& spec) {
  spec.validate();
  const std::size_t n = spec.sample_count();
  std::vector<double> times(n);
  std::vector<Vec3> truth(n), cams(n);
  Scenario out;
  out.observations.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double t = static_cast<double>(j) / spec.frame_rate;
    times[j] = t;
    truth[j] = spec.target.trajectory.eval(t);
    cams[j] = camera_position(spec.camera, t);
    const Vec3 d = truth[j] - cams[j];
    const double dist = d.norm();
    if (!(dist > 1e-9 * std::max(1.0, truth[j].norm()))) {
      throw Error(ErrorCode::degenerate_scenario,
                  "target coincides with camera at t=" + std::to_string(t));
    }
    out.observations.push_back(Observation{t, cams[j], d / dist, std::nullopt});
  }
  out.truth = StackedTrajectory::from_points(times, truth);
  out.camera_truth = StackedTrajectory::from_points(times, cams);
  return out;
}

std::vector<Observation> apply_noise(std::span<const Observation> observations,
                                     const NoiseSpec& noise, std::uint64_t seed) {
  noise.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

  // Draws happen unconditionally so the stream layout does not depend on
  // which standard deviations are zero.
  const Vec3 cam_sys(gauss(rng), gauss(rng), gauss(rng));
  const Vec3 ray_sys_axis(gauss(rng), gauss(rng), gauss(rng));
  const double ray_sys_angle = gauss(rng) * noise.ray_angle_systematic_std * kDeg;

  std::vector<Observation> out(observations.begin(), observations.end());
  for (auto& o : out) {
    const Vec3 cam_rand(gauss(rng), gauss(rng), gauss(rng));
    const double rand_phase = phase(rng);
    const double rand_angle = gauss(rng) * noise.ray_angle_random_std * kDeg;

    if (noise.camera_pos_systematic_std > 0.0) o.camera_center += cam_sys * noise.camera_pos_systematic_std;
    if (noise.camera_pos_random_std > 0.0) o.camera_center += cam_rand * noise.camera_pos_random_std;

    bool rotated = false;
    if (noise.ray_angle_systematic_std > 0.0) {
      Vec3 axis = ray_sys_axis - ray_sys_axis.dot(o.ray) * o.ray;
      axis = axis.norm() > 1e-12 ? Vec3(axis.normalized()) : o.ray.unitOrthogonal();
      o.ray = rotate_orthogonal(o.ray, axis, ray_sys_angle);
      rotated = true;
    }
    if (noise.ray_angle_random_std > 0.0) {
      const Vec3 e1 = o.ray.unitOrthogonal();
      const Vec3 e2 = o.ray.cross(e1);
      const Vec3 axis = std::cos(rand_phase) * e1 + std::sin(rand_phase) * e2;
      o.ray = rotate_orthogonal(o.ray, axis, rand_angle);
      rotated = true;
    }
    if (rotated) o.ray.normalize();
  }
  return out;
}

std::vector<std::size_t> occlusion_keep_indices(std::size_t n, double fraction,
                                                std::uint64_t seed,
                                                std::size_t min_remaining) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw Error(ErrorCode::invalid_input, "occlusion fraction must lie in [0, 1)");
  }
  const auto removed = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  if (n - removed < min_remaining) {
    throw Error(ErrorCode::too_few_observations,
                "occlusion leaves " + std::to_string(n - removed) + " observations, need " +
                    std::to_string(min_remaining),
                static_cast<long>(min_remaining));
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first `removed` slots become the dropped set.
  for (std::size_t i = 0; i < removed; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::vector<std::size_t> keep(idx.begin() + static_cast<std::ptrdiff_t>(removed), idx.end());
  std::sort(keep.begin(), keep.end());
  return keep;
}

std::vector<Observation> occlude(std::span<const Observation> observations, double fraction,
                                 std::uint64_t seed, std::size_t min_remaining) {
  const auto keep = occlusion_keep_indices(observations.size(), fraction, seed, min_remaining);
  std::vector<Observation> out;
  out.reserve(keep.size());
  for (std::size_t i : keep) out.push_back(observations[i]);
  return out;
}

// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
  if (targets.empty()) throw Error(ErrorCode::config_error, "targets: at least one target required");
  if (windows.empty()) throw Error(ErrorCode::config_error, "windows: at least one window required");
  if (occlusions.empty()) throw Error(ErrorCode::config_error, "occlusions: at least one level required");
  if (methods.empty()) throw Error(ErrorCode::config_error, "methods: at least one method required");
  if (orders.empty()) throw Error(ErrorCode::config_error, "orders: at least one order mode required");
  if (candidate_orders.empty()) throw Error(ErrorCode::config_error, "candidate_orders: must not be empty");
  if (trials < 1) throw Error(ErrorCode::config_error, "trials: must be >= 1");
  for (const auto& o : orders) {
    if (!o.automatic && o.order < 0) throw Error(ErrorCode::config_error, "orders: must be >= 0");
  }
  for (int k : candidate_orders) {
    if (k < 0) throw Error(ErrorCode::config_error, "candidate_orders: must be >= 0");
  }
  try {
    noise.validate();
    for (const auto& t : targets) {
      for (double w : windows) {
        for (double occ : occlusions) {
          ScenarioSpec s{t, camera, frame_rate, w, occ, seed};
          s.validate();
        }
      }
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::config_error, e.what());
  }
}

const AggregateRow* ExperimentReport::find(const std::string& target, double window,
                                           double occlusion, const std::string& order_label,
                                           SolveMethod method) const {
  for (const auto& r : rows) {
    if (r.target == target && std::abs(r.window - window) < 1e-12 &&
        std::abs(r.occlusion - occlusion) < 1e-12 && r.order_label == order_label &&
        r.method == method) {
      return &r;
    }
  }
  return nullptr;
}

Scenario realize_trial(const Scenario& base, const NoiseSpec& noise, double occlusion,
                       std::uint64_t seed, std::size_t min_remaining) {
  const auto noisy = apply_noise(base.observations, noise, splitmix64(seed ^ kNoiseSalt));
  const auto keep = occlusion_keep_indices(noisy.size(), occlusion,
                                           splitmix64(seed ^ kOcclusionSalt), min_remaining);
  std::vector<double> times;
  std::vector<Vec3> truth, cams;
  Scenario out;
  for (std::size_t i : keep) {
    out.observations.push_back(noisy[i]);
    times.push_back(base.truth.times[i]);
    truth.push_back(base.truth.point(i));
    cams.push_back(base.camera_truth.point(i));
  }
  out.truth = StackedTrajectory::from_points(times, truth);
  out.camera_truth = StackedTrajectory::from_points(times, cams);
  return out;
}

namespace {

struct DataCell {
  const TargetMotion* target;
  double window;
  double occlusion;
  Scenario base;
};

std::vector<TrialResult> run_trial(const ExperimentConfig& cfg, const DataCell& cell,
                                   std::size_t trial) {
  const std::uint64_t seed = trial_seed(cfg.seed, trial);
  const int true_order = cell.target->true_order();

  std::vector<TrialResult> results;
  results.reserve(cfg.orders.size());
  for (const auto& order : cfg.orders) {
    TrialResult tr;
    tr.trial = trial;
    tr.target = cell.target->name;
    tr.window = cell.window;
    tr.occlusion = cell.occlusion;
    tr.order_label = order.label();
    tr.seed = seed;
    tr.true_order = true_order;
    results.push_back(std::move(tr));
  }

  Scenario trial_data;
  try {
    trial_data = realize_trial(cell.base, cfg.noise, cell.occlusion, seed,
                               static_cast<std::size_t>(min_observations(true_order)));
  } catch (const Error& e) {
    for (auto& tr : results) {
      for (auto m : cfg.methods) tr.per_method[m] = MethodOutcome{false, std::string(to_string(e.code()))};
    }
    return results;
  }
  const std::vector<Observation>& visible = trial_data.observations;
  const StackedTrajectory& truth_st = trial_data.truth;
  const StackedTrajectory& cam_st = trial_data.camera_truth;
  const std::vector<double>& times = truth_st.times;
  const std::vector<Vec3> truth = truth_st.points();
  const std::vector<Vec3> cams = cam_st.points();

  for (std::size_t oi = 0; oi < cfg.orders.size(); ++oi) {
    const OrderSpec& order = cfg.orders[oi];
    TrialResult& tr = results[oi];
    tr.observations = visible.size();
    for (auto method : cfg.methods) {
      MethodOutcome out;
      try {
        const SolveReport rep =
            order.automatic
                ? select_order(visible, cfg.candidate_orders, method, cfg.solve_options)
                : solve(visible, order.order, method, cfg.solve_options);
        std::vector<Vec3> est;
        est.reserve(times.size());
        for (double t : times) est.push_back(rep.position_at(t));
        out.ok = true;
        out.rms = rms_distance(est, truth);
        out.rms_to_camera = rms_distance(est, cams);
        out.objective = rep.objective;
        out.ridge_param = rep.ridge_param;
        out.selected_order = rep.order_selected;
        try {
          out.eta = reconstructability_index(cam_st, truth_st, rep.order_selected);
        } catch (const Error&) {
          out.eta = std::numeric_limits<double>::quiet_NaN();
        }
      } catch (const Error& e) {
        out = MethodOutcome{false, std::string(to_string(e.code()))};
      }
      tr.per_method[method] = out;
    }
  }
  return results;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();

  std::vector<DataCell> cells;
  for (const auto& t : config.targets) {
    for (double w : config.windows) {
      for (double occ : config.occlusions) {
        ScenarioSpec spec{t, config.camera, config.frame_rate, w, occ, config.seed};
        cells.push_back(DataCell{&t, w, occ, generate_scenario(spec)});
      }
    }
  }

  const std::size_t n_trials = static_cast<std::size_t>(config.trials);
  const std::size_t n_tasks = cells.size() * n_trials;
  std::vector<std::vector<TrialResult>> slots(n_tasks);

  unsigned threads = config.threads ? config.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_tasks)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t task = next++; task < n_tasks; task = next++) {
      slots[task] = run_trial(config, cells[task / n_trials], task % n_trials);
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  ExperimentReport report;
  report.name = config.name;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t oi = 0; oi < config.orders.size(); ++oi) {
      for (std::size_t i = 0; i < n_trials; ++i) {
        report.trials.push_back(slots[c * n_trials + i][oi]);
      }
      for (auto method : config.methods) {
        AggregateRow row;
        row.target = cells[c].target->name;
        row.window = cells[c].window;
        row.occlusion = cells[c].occlusion;
        row.order_label = config.orders[oi].label();
        row.method = method;
        row.trials = config.trials;
        std::vector<double> rms, to_cam, obj, ridge;
        int hits = 0;
        for (std::size_t i = 0; i < n_trials; ++i) {
          const TrialResult& tr = slots[c * n_trials + i][oi];
          const MethodOutcome& m = tr.per_method.at(method);
          if (!m.ok) {
            ++row.failures;
            continue;
          }
          rms.push_back(m.rms);
          to_cam.push_back(m.rms_to_camera);
          obj.push_back(m.objective);
          ridge.push_back(m.ridge_param);
          if (m.selected_order == tr.true_order) ++hits;
        }
        row.mean_rms = mean(rms);
        row.median_rms = median(rms);
        row.std_rms = sample_std(rms);
        row.mean_rms_to_camera = mean(to_cam);
        row.mean_objective = mean(obj);
        row.mean_ridge_param = mean(ridge);
        row.selection_accuracy = static_cast<double>(hits) / static_cast<double>(config.trials);
        report.rows.push_back(row);
      }
    }
  }
  return report;
}

}  // namespace monotraj::sim
