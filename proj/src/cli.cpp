#include "monotraj/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "monotraj/error.hpp"
#include "monotraj/estimator.hpp"
#include "monotraj/io.hpp"
#include "monotraj/reconstructability.hpp"
#include "monotraj/sim.hpp"

namespace monotraj::cli {

namespace fs = std::filesystem;
using io::format_double;

namespace {

struct SolveArgs {
  std::string input;
  std::optional<int> order;
  bool auto_order = false;
  std::vector<int> candidates{std::begin(kDefaultCandidateOrders),
                              std::end(kDefaultCandidateOrders)};
  std::string method = "ridge";
  bool paper_literal = false;
  bool no_time_normalization = false;
  std::string truth;
  std::string intrinsics;
  std::string out;
};

struct ExperimentArgs {
  std::string config;
  std::string out;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

struct ReconArgs {
  std::string camera;
  std::string truth;
  int order = 1;
};

struct SimulateArgs {
  std::string target = "linear";
  double window = 6.0;
  double rate = 10.0;
  std::string noise = "high";
  double occlusion = 0.0;
  std::uint64_t seed = 1;
  std::uint64_t trial = 0;
  std::string out;
};

void print_degeneracy(std::ostream& out, const DegeneracyReport& d) {
  out << "degeneracy (K=" << d.order << "): ";
  if (!d.any()) {
    out << "none\n";
  } else {
    bool first = true;
    for (auto f : d.flags) {
      out << (first ? "" : ", ") << to_string(f);
      first = false;
    }
    out << '\n';
  }
  if (d.common_point) {
    out << "  common_point: " << format_double(d.common_point->x()) << ' '
        << format_double(d.common_point->y()) << ' ' << format_double(d.common_point->z())
        << "  (mean ray distance " << format_double(d.common_point_residual) << ")\n";
  }
  out << "  camera_order_fit:";
  for (const auto& [k, v] : d.camera_order_fit) out << " K" << k << '=' << format_double(v);
  out << "\n  design_rank: " << d.design_rank << '\n';
}

std::optional<DegeneracyReport> try_degeneracy(std::span<const Observation> obs, int order) {
  try {
    return detect_degeneracy(obs, order);
  } catch (const Error&) {
    return std::nullopt;
  }
}

int cmd_solve(const SolveArgs& a, std::ostream& out) {
  std::optional<io::IntrinsicsTable> intr;
  if (!a.intrinsics.empty()) intr = io::read_intrinsics_file(a.intrinsics);
  const auto set = io::read_observation_file(a.input, intr ? &*intr : nullptr);
  const auto& obs = set.observations;

  SolveOptions opts;
  opts.normalize_time = !a.no_time_normalization;
  opts.ridge_sign = a.paper_literal ? RidgeSign::paper_literal : RidgeSign::standard;
  const SolveMethod method = parse_solve_method(a.method);

  std::optional<StackedTrajectory> truth;
  if (!a.truth.empty()) truth = io::read_positions_file(a.truth);

  out << "input: " << a.input << " (" << obs.size() << " observations, "
      << io::to_string(set.schema) << " schema)\n";

  SolveReport report;
  try {
    report = a.order ? solve(obs, *a.order, method, opts)
                     : select_order(obs, a.candidates, method, opts);
  } catch (const Error& e) {
    // Show why the geometry failed before reporting the error.
    if (e.code() == ErrorCode::rank_deficient || e.code() == ErrorCode::numerical_failure ||
        e.code() == ErrorCode::division_by_zero) {
      const int k = a.order ? *a.order : *std::max_element(a.candidates.begin(), a.candidates.end());
      if (auto d = try_degeneracy(obs, k)) print_degeneracy(out, *d);
    }
    throw;
  }
  report.degeneracy = try_degeneracy(obs, report.order_selected);

  const io::ResultFile result = io::make_result(report, obs, truth ? &*truth : nullptr);

  out << "order: " << result.order << (a.order ? " (fixed)" : " (selected)") << '\n';
  out << "method: " << to_string(result.method);
  if (result.method == SolveMethod::ridge && opts.ridge_sign == RidgeSign::paper_literal) {
    out << " (paper-literal sign)";
  }
  out << "\nridge_param: " << format_double(result.ridge_param) << '\n';
  out << "objective: " << format_double(result.objective) << '\n';
  out << "residual_norm: " << format_double(result.residual_norm) << '\n';
  out << "condition_number: " << format_double(result.condition_number) << '\n';
  out << "design_rank: " << result.design_rank << '\n';
  static const char* axes = "xyz";
  out << "coefficients (ascending powers of t):\n";
  for (int r = 0; r < 3; ++r) {
    out << "  " << axes[r] << ':';
    for (Eigen::Index k = 0; k < result.coefficients.cols(); ++k) {
      out << ' ' << format_double(result.coefficients(r, k));
    }
    out << '\n';
  }
  if (!a.order) {
    out << "candidates:\n";
    for (const auto& c : result.candidates) {
      out << "  K=" << c.order << ' ';
      switch (c.status) {
        case CandidateOutcome::Status::evaluated:
          out << "objective=" << format_double(c.objective);
          break;
        case CandidateOutcome::Status::skipped: out << "skipped"; break;
        case CandidateOutcome::Status::disqualified: out << "disqualified"; break;
      }
      if (!c.note.empty()) out << " (" << c.note << ')';
      out << '\n';
    }
  }
  if (result.degeneracy) print_degeneracy(out, *result.degeneracy);
  if (result.rms_error) out << "rms_error: " << format_double(*result.rms_error) << '\n';
  if (truth) out << "eta: " << (result.eta ? format_double(*result.eta) : "indeterminate") << '\n';

  if (!a.out.empty()) {
    io::write_result_file(a.out, result);
    out << "wrote " << a.out << '\n';
  }
  return 0;
}

int cmd_experiment(const ExperimentArgs& a, std::ostream& out) {
  sim::ExperimentConfig cfg = io::load_experiment_config(a.config);
  if (a.trials) cfg.trials = *a.trials;
  if (a.seed) cfg.seed = *a.seed;
  if (a.threads) cfg.threads = *a.threads;
  cfg.validate();

  const auto start = std::chrono::steady_clock::now();
  const sim::ExperimentReport report = sim::run_experiment(cfg);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const fs::path dir(a.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create '" + dir.string() + "': " + ec.message());
  const fs::path agg = dir / (cfg.name + "_aggregate.csv");
  const fs::path trials = dir / (cfg.name + "_trials.csv");
  {
    std::ofstream f(agg, std::ios::binary);
    if (!f) throw Error(ErrorCode::io_error, "cannot write '" + agg.string() + "'");
    io::write_aggregate_csv(f, report);
  }
  {
    std::ofstream f(trials, std::ios::binary);
    if (!f) throw Error(ErrorCode::io_error, "cannot write '" + trials.string() + "'");
    io::write_trials_csv(f, report);
  }

  out << "experiment " << cfg.name << ": " << cfg.trials << " trials per cell, seed " << cfg.seed
      << ", " << format_double(secs) << " s\n";
  out << "target,window_s,occlusion,order,method,failures,mean_rms_m,selection_accuracy\n";
  for (const auto& r : report.rows) {
    out << r.target << ',' << format_double(r.window) << ',' << format_double(r.occlusion) << ','
        << r.order_label << ',' << to_string(r.method) << ',' << r.failures << ','
        << format_double(r.mean_rms) << ',' << format_double(r.selection_accuracy) << '\n';
  }
  out << "wrote " << agg.string() << "\nwrote " << trials.string() << '\n';
  return 0;
}

int cmd_reconstructability(const ReconArgs& a, std::ostream& out) {
  const StackedTrajectory camera = io::read_positions_file(a.camera);
  const StackedTrajectory truth = io::read_positions_file(a.truth);

  if (camera.times != truth.times) {
    std::string rows;
    const std::size_t n = std::max(camera.size(), truth.size());
    int listed = 0;
    for (std::size_t i = 0; i < n && listed < 10; ++i) {
      const bool both = i < camera.size() && i < truth.size();
      if (both && camera.times[i] == truth.times[i]) continue;
      rows += (listed ? "; " : "") + std::string("row ") + std::to_string(i + 1) + " camera t=" +
              (i < camera.size() ? format_double(camera.times[i]) : "-") + " truth t=" +
              (i < truth.size() ? format_double(truth.times[i]) : "-");
      ++listed;
    }
    throw Error(ErrorCode::time_mismatch, "camera and truth times differ: " + rows);
  }

  out << "order: " << a.order << '\n';
  try {
    const double eta = reconstructability_index(camera, truth, a.order);
    out << "eta: " << format_double(eta) << '\n';
  } catch (const Error& e) {
    if (e.code() == ErrorCode::time_mismatch) throw;
    out << "eta: indeterminate (" << to_string(e.code()) << ": " << e.what() << ")\n";
  }

  // Rays from the camera toward the target; skipped where they coincide.
  std::vector<Observation> obs;
  for (std::size_t i = 0; i < camera.size(); ++i) {
    const Vec3 d = truth.point(i) - camera.point(i);
    if (d.norm() > 0.0) obs.push_back({camera.times[i], camera.point(i), d.normalized(), std::nullopt});
  }
  if (auto d = try_degeneracy(obs, a.order)) {
    print_degeneracy(out, *d);
  } else {
    out << "degeneracy: not evaluated (fewer than 2 usable rays)\n";
  }
  return 0;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  sim::ScenarioSpec spec;
  spec.target = sim::TargetMotion::preset(a.target);
  spec.duration = a.window;
  spec.frame_rate = a.rate;
  spec.occlusion_fraction = a.occlusion;
  spec.seed = a.seed;
  const sim::NoiseSpec noise = sim::NoiseSpec::preset(a.noise);
  noise.validate();

  // Trial `trial` of an experiment with master seed `seed` sees exactly this data.
  const sim::Scenario base = sim::generate_scenario(spec);
  const sim::Scenario trial = sim::realize_trial(
      base, noise, spec.occlusion_fraction, sim::trial_seed(a.seed, a.trial),
      static_cast<std::size_t>(min_observations(spec.target.true_order())));
  const auto& obs = trial.observations;

  const fs::path dir(a.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create '" + dir.string() + "': " + ec.message());
  io::write_observation_file(dir / "observations.csv", obs);
  io::write_positions_file(dir / "truth.csv", trial.truth);
  io::write_positions_file(dir / "camera.csv", trial.camera_truth);
  out << "simulated " << obs.size() << " observations of '" << spec.target.name << "' into "
      << dir.string() << " (observations.csv, truth.csv, camera.csv)\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monocular trajectory reconstruction from sight-rays with known camera poses"};
  app.name("monotraj");
  app.require_subcommand(1);

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "Estimate a polynomial trajectory from an observation file");
  solve_cmd->add_option("input", solve_args.input, "Observation CSV")->required();
  auto* order_opt = solve_cmd->add_option("--order", solve_args.order, "Fixed polynomial order K");
  auto* auto_opt = solve_cmd->add_flag("--auto-order", solve_args.auto_order,
                                       "Select the order automatically (default)");
  order_opt->excludes(auto_opt);
  solve_cmd->add_option("--candidates", solve_args.candidates, "Candidate orders for --auto-order")
      ->delimiter(',');
  solve_cmd->add_option("--method", solve_args.method, "ls or ridge")
      ->check(CLI::IsMember({"ls", "ridge"}));
  solve_cmd->add_flag("--paper-literal-ridge", solve_args.paper_literal,
                      "Use (A^T A - rI) instead of (A^T A + rI)");
  solve_cmd->add_flag("--no-time-normalization", solve_args.no_time_normalization,
                      "Fit in raw time");
  solve_cmd->add_option("--truth", solve_args.truth, "Ground-truth positions (time,x,y,z)");
  solve_cmd->add_option("--intrinsics", solve_args.intrinsics, "Intrinsics CSV for the pixel schema");
  solve_cmd->add_option("--out", solve_args.out, "Write the JSON result here");

  ExperimentArgs exp_args;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a Monte Carlo experiment from a config file");
  exp_cmd->add_option("config", exp_args.config, "Experiment JSON config")->required();
  exp_cmd->add_option("--out", exp_args.out, "Output directory")->required();
  exp_cmd->add_option("--trials", exp_args.trials, "Override the trial count");
  exp_cmd->add_option("--seed", exp_args.seed, "Override the master seed");
  exp_cmd->add_option("--threads", exp_args.threads, "Worker threads (0 = all cores)");

  ReconArgs rec_args;
  auto* rec_cmd = app.add_subcommand("reconstructability", "Reconstructability index of a camera/target pair");
  rec_cmd->add_option("camera", rec_args.camera, "Camera positions CSV")->required();
  rec_cmd->add_option("truth", rec_args.truth, "Target positions CSV")->required();
  rec_cmd->add_option("--order", rec_args.order, "Polynomial order K")->check(CLI::NonNegativeNumber);

  SimulateArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "Write a synthetic observation file");
  sim_cmd->add_option("--target", sim_args.target, "linear or accelerated");
  sim_cmd->add_option("--window", sim_args.window, "Observation window in seconds");
  sim_cmd->add_option("--rate", sim_args.rate, "Frame rate in Hz");
  sim_cmd->add_option("--noise", sim_args.noise, "none, high or low");
  sim_cmd->add_option("--occlusion", sim_args.occlusion, "Fraction of samples removed");
  sim_cmd->add_option("--seed", sim_args.seed, "Master seed, as in an experiment config");
  sim_cmd->add_option("--trial", sim_args.trial, "Trial index under the master seed");
  sim_cmd->add_option("--out", sim_args.out, "Output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*solve_cmd) return cmd_solve(solve_args, out);
    if (*exp_cmd) return cmd_experiment(exp_args, out);
    if (*rec_cmd) return cmd_reconstructability(rec_args, out);
    if (*sim_cmd) return cmd_simulate(sim_args, out);
  } catch (const Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << to_string(e.code()) << ": " << msg << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace monotraj::cli
