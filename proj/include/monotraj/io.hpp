#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "monotraj/estimator.hpp"
#include "monotraj/geometry.hpp"
#include "monotraj/reconstructability.hpp"
#include "monotraj/sim.hpp"

namespace monotraj::io {

// Observation files are comma-separated with one header line; '#' lines and
// blank lines are ignored. The schema is chosen by the header:
//
//   rays:   time,cx,cy,cz,lx,ly,lz
//   pixels: time,cx,cy,cz,r11,r12,r13,r21,r22,r23,r31,r32,r33,u,v,camera_id
//
// Pixel rows reference intrinsics by camera_id, defined in a separate file
// with header camera_id,fx,fy,skew,ppx,ppy. Columns may appear in any order.
// Rows are sorted by time on ingest; repeated times are rejected.

enum class ObservationSchema { rays, pixels };

std::string_view to_string(ObservationSchema s);

using IntrinsicsTable = std::map<std::string, CameraIntrinsics>;

IntrinsicsTable parse_intrinsics(std::istream& in);
IntrinsicsTable read_intrinsics_file(const std::filesystem::path& path);

struct ObservationSet {
  ObservationSchema schema = ObservationSchema::rays;
  std::vector<Observation> observations;
};

ObservationSet parse_observations(std::istream& in, const IntrinsicsTable* intrinsics = nullptr);
ObservationSet read_observation_file(const std::filesystem::path& path,
                                     const IntrinsicsTable* intrinsics = nullptr);

/// Writes the rays schema at 17 significant digits.
void write_observations(std::ostream& out, std::span<const Observation> observations);
void write_observation_file(const std::filesystem::path& path,
                            std::span<const Observation> observations);

/// Position files: header time,x,y,z. parse_positions also accepts either
/// observation schema and then returns the camera centers.
StackedTrajectory parse_positions(std::istream& in);
StackedTrajectory read_positions_file(const std::filesystem::path& path);
void write_positions(std::ostream& out, const StackedTrajectory& traj);
void write_positions_file(const std::filesystem::path& path, const StackedTrajectory& traj);

// ---------------------------------------------------------------------------
// Result files (JSON).

struct ResultPosition {
  double time = 0.0;
  Vec3 position = Vec3::Zero();
  double ray_error = 0.0;
  std::optional<double> error;  // distance to truth, when truth is supplied
};

struct ResultFile {
  int order = 0;
  SolveMethod method = SolveMethod::ridge;
  CoeffMatrix coefficients = CoeffMatrix::Zero(3, 1);
  CoeffMatrix local_coefficients = CoeffMatrix::Zero(3, 1);
  TimeMap time_map;
  double ridge_param = 0.0;
  double objective = 0.0;
  double residual_norm = 0.0;
  double condition_number = 0.0;
  int design_rank = 0;
  std::vector<CandidateOutcome> candidates;
  std::optional<DegeneracyReport> degeneracy;
  std::vector<ResultPosition> positions;
  std::optional<double> rms_error;
  std::optional<double> eta;  // may be +inf
};

ResultFile make_result(const SolveReport& report, std::span<const Observation> observations,
                       const StackedTrajectory* truth = nullptr);

std::string serialize_result(const ResultFile& result);
ResultFile parse_result(std::string_view text);
void write_result_file(const std::filesystem::path& path, const ResultFile& result);
ResultFile read_result_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Experiment configuration (JSON). See presets/README.md for the schema.

sim::ExperimentConfig parse_experiment_config(std::string_view text);
sim::ExperimentConfig load_experiment_config(const std::filesystem::path& path);

void write_aggregate_csv(std::ostream& out, const sim::ExperimentReport& report);
void write_trials_csv(std::ostream& out, const sim::ExperimentReport& report);

/// %.17g, with "inf", "-inf" and "nan" spelled out.
std::string format_double(double v);

}  // namespace monotraj::io
