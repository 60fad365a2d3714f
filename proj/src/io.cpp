#include "monotraj/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "monotraj/error.hpp"

namespace monotraj::io {

using nlohmann::json;

namespace {

struct Row {
  int line = 0;
  std::vector<std::string> cells;
};

struct Table {
  int header_line = 0;
  std::vector<std::string> header;
  std::vector<Row> rows;

  int column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  }
  bool has_columns(std::initializer_list<const char*> names) const {
    for (const char* n : names) {
      if (column(n) < 0) return false;
    }
    return true;
  }
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string_view rest(line);
  while (true) {
    const auto comma = rest.find(',');
    out.push_back(trim(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

Table parse_table(std::istream& in) {
  Table t;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    auto cells = split(s);
    if (!have_header) {
      t.header = std::move(cells);
      t.header_line = lineno;
      have_header = true;
      std::set<std::string> seen;
      for (const auto& h : t.header) {
        if (!seen.insert(h).second) {
          throw Error(ErrorCode::schema_error,
                      "line " + std::to_string(lineno) + ": duplicate column '" + h + "'", lineno);
        }
      }
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw Error(ErrorCode::schema_error,
                  "line " + std::to_string(lineno) + ": expected " +
                      std::to_string(t.header.size()) + " fields, got " +
                      std::to_string(cells.size()),
                  lineno);
    }
    t.rows.push_back(Row{lineno, std::move(cells)});
  }
  if (!have_header) throw Error(ErrorCode::schema_error, "missing header line", 0);
  return t;
}

double to_double(const Row& row, int col, const Table& t) {
  const std::string& s = row.cells[col];
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw Error(ErrorCode::schema_error,
                "line " + std::to_string(row.line) + ": column '" + t.header[col] +
                    "' is not a number: '" + s + "'",
                row.line);
  }
  return v;
}

double field(const Row& row, const Table& t, const char* name) {
  return to_double(row, t.column(name), t);
}

Vec3 field3(const Row& row, const Table& t, const char* a, const char* b, const char* c) {
  return {field(row, t, a), field(row, t, b), field(row, t, c)};
}

[[noreturn]] void row_error(const Row& row, const std::string& what) {
  throw Error(ErrorCode::schema_error, "line " + std::to_string(row.line) + ": " + what, row.line);
}

template <typename T, typename TimeOf>
void sort_and_check_times(std::vector<std::pair<int, T>>& items, TimeOf time_of) {
  std::stable_sort(items.begin(), items.end(), [&](const auto& a, const auto& b) {
    return time_of(a.second) < time_of(b.second);
  });
  for (std::size_t i = 1; i < items.size(); ++i) {
    if (time_of(items[i].second) == time_of(items[i - 1].second)) {
      throw Error(ErrorCode::schema_error,
                  "line " + std::to_string(items[i].first) + ": repeated time " +
                      format_double(time_of(items[i].second)),
                  items[i].first);
    }
  }
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write '" + path.string() + "'");
  return out;
}

constexpr const char* kRayCols[] = {"time", "cx", "cy", "cz", "lx", "ly", "lz"};
constexpr const char* kPixelCols[] = {"time", "cx",  "cy",  "cz",  "r11", "r12",
                                      "r13",  "r21", "r22", "r23", "r31", "r32",
                                      "r33",  "u",   "v",   "camera_id"};

bool header_is(const Table& t, std::span<const char* const> cols) {
  if (t.header.size() != cols.size()) return false;
  for (const char* c : cols) {
    if (t.column(c) < 0) return false;
  }
  return true;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string_view to_string(ObservationSchema s) {
  return s == ObservationSchema::rays ? "rays" : "pixels";
}

IntrinsicsTable parse_intrinsics(std::istream& in) {
  const Table t = parse_table(in);
  if (!t.has_columns({"camera_id", "fx", "fy", "skew", "ppx", "ppy"}) || t.header.size() != 6) {
    throw Error(ErrorCode::schema_error,
                "line " + std::to_string(t.header_line) +
                    ": intrinsics header must be camera_id,fx,fy,skew,ppx,ppy",
                t.header_line);
  }
  IntrinsicsTable table;
  for (const Row& row : t.rows) {
    const std::string id = row.cells[t.column("camera_id")];
    try {
      auto k = CameraIntrinsics::from_params(field(row, t, "fx"), field(row, t, "fy"),
                                             field(row, t, "ppx"), field(row, t, "ppy"),
                                             field(row, t, "skew"));
      if (!table.emplace(id, k).second) row_error(row, "duplicate camera_id '" + id + "'");
    } catch (const Error& e) {
      if (e.code() == ErrorCode::schema_error) throw;
      row_error(row, e.what());
    }
  }
  return table;
}

IntrinsicsTable read_intrinsics_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_intrinsics(in);
}

ObservationSet parse_observations(std::istream& in, const IntrinsicsTable* intrinsics) {
  const Table t = parse_table(in);
  ObservationSet set;
  if (header_is(t, kRayCols)) {
    set.schema = ObservationSchema::rays;
  } else if (header_is(t, kPixelCols)) {
    set.schema = ObservationSchema::pixels;
    if (!intrinsics) {
      throw Error(ErrorCode::schema_error,
                  "line " + std::to_string(t.header_line) +
                      ": pixel schema needs an intrinsics file",
                  t.header_line);
    }
  } else {
    throw Error(ErrorCode::schema_error,
                "line " + std::to_string(t.header_line) +
                    ": unrecognized header (expected time,cx,cy,cz,lx,ly,lz or the pixel schema)",
                t.header_line);
  }

  std::vector<std::pair<int, Observation>> items;
  for (const Row& row : t.rows) {
    try {
      const double time = field(row, t, "time");
      const Vec3 center = field3(row, t, "cx", "cy", "cz");
      if (set.schema == ObservationSchema::rays) {
        items.emplace_back(row.line,
                           make_observation(time, center, field3(row, t, "lx", "ly", "lz")));
      } else {
        Mat3 r;
        r << field(row, t, "r11"), field(row, t, "r12"), field(row, t, "r13"),
            field(row, t, "r21"), field(row, t, "r22"), field(row, t, "r23"),
            field(row, t, "r31"), field(row, t, "r32"), field(row, t, "r33");
        const Vec2 px(field(row, t, "u"), field(row, t, "v"));
        const std::string id = row.cells[t.column("camera_id")];
        const auto k = intrinsics->find(id);
        if (k == intrinsics->end()) row_error(row, "unknown camera_id '" + id + "'");
        const CameraPose pose = CameraPose::from(r, center);
        items.emplace_back(row.line,
                           make_observation(time, center, compute_sight_ray(k->second, pose, px), px));
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::schema_error) throw;
      row_error(row, e.what());
    }
  }
  sort_and_check_times(items, [](const Observation& o) { return o.time; });
  for (auto& [line, o] : items) set.observations.push_back(std::move(o));
  return set;
}

ObservationSet read_observation_file(const std::filesystem::path& path,
                                     const IntrinsicsTable* intrinsics) {
  auto in = open_in(path);
  return parse_observations(in, intrinsics);
}

void write_observations(std::ostream& out, std::span<const Observation> observations) {
  out << "time,cx,cy,cz,lx,ly,lz\n";
  for (const auto& o : observations) {
    out << format_double(o.time);
    for (int i = 0; i < 3; ++i) out << ',' << format_double(o.camera_center(i));
    for (int i = 0; i < 3; ++i) out << ',' << format_double(o.ray(i));
    out << '\n';
  }
}

void write_observation_file(const std::filesystem::path& path,
                            std::span<const Observation> observations) {
  auto out = open_out(path);
  write_observations(out, observations);
}

StackedTrajectory parse_positions(std::istream& in) {
  const Table t = parse_table(in);
  const char* xs[3];
  if (t.header.size() == 4 && t.has_columns({"time", "x", "y", "z"})) {
    xs[0] = "x", xs[1] = "y", xs[2] = "z";
  } else if (header_is(t, kRayCols) || header_is(t, kPixelCols)) {
    xs[0] = "cx", xs[1] = "cy", xs[2] = "cz";
  } else {
    throw Error(ErrorCode::schema_error,
                "line " + std::to_string(t.header_line) +
                    ": unrecognized header (expected time,x,y,z or an observation schema)",
                t.header_line);
  }
  std::vector<std::pair<int, std::pair<double, Vec3>>> items;
  for (const Row& row : t.rows) {
    const double time = field(row, t, "time");
    const Vec3 p = field3(row, t, xs[0], xs[1], xs[2]);
    if (!std::isfinite(time) || !p.allFinite()) row_error(row, "non-finite value");
    items.emplace_back(row.line, std::make_pair(time, p));
  }
  sort_and_check_times(items, [](const std::pair<double, Vec3>& v) { return v.first; });
  std::vector<double> times;
  std::vector<Vec3> pts;
  for (const auto& [line, v] : items) {
    times.push_back(v.first);
    pts.push_back(v.second);
  }
  return StackedTrajectory::from_points(times, pts);
}

StackedTrajectory read_positions_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_positions(in);
}

void write_positions(std::ostream& out, const StackedTrajectory& traj) {
  out << "time,x,y,z\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Vec3 p = traj.point(i);
    out << format_double(traj.times[i]) << ',' << format_double(p.x()) << ','
        << format_double(p.y()) << ',' << format_double(p.z()) << '\n';
  }
}

void write_positions_file(const std::filesystem::path& path, const StackedTrajectory& traj) {
  auto out = open_out(path);
  write_positions(out, traj);
}

// ---------------------------------------------------------------------------

namespace {

json coeffs_to_json(const CoeffMatrix& c) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r) {
    json row = json::array();
    for (Eigen::Index k = 0; k < c.cols(); ++k) row.push_back(c(r, k));
    rows.push_back(row);
  }
  return rows;
}

CoeffMatrix coeffs_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_array() || j[0].empty()) {
    throw Error(ErrorCode::schema_error, path + ": expected 3 coefficient rows");
  }
  const std::size_t n = j[0].size();
  CoeffMatrix c(3, n);
  for (int r = 0; r < 3; ++r) {
    if (!j[r].is_array() || j[r].size() != n) {
      throw Error(ErrorCode::schema_error, path + "[" + std::to_string(r) + "]: row length differs");
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (!j[r][k].is_number()) {
        throw Error(ErrorCode::schema_error,
                    path + "[" + std::to_string(r) + "][" + std::to_string(k) + "]: not a number");
      }
      c(r, static_cast<Eigen::Index>(k)) = j[r][k].get<double>();
    }
  }
  return c;
}

// JSON has no infinity; non-finite values are written as strings.
json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

double number_from(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw Error(ErrorCode::schema_error, "expected a number, got " + j.dump());
}

std::string_view status_name(CandidateOutcome::Status s) {
  switch (s) {
    case CandidateOutcome::Status::evaluated: return "evaluated";
    case CandidateOutcome::Status::skipped: return "skipped";
    case CandidateOutcome::Status::disqualified: return "disqualified";
  }
  return "evaluated";
}

CandidateOutcome::Status parse_status(const std::string& s) {
  if (s == "skipped") return CandidateOutcome::Status::skipped;
  if (s == "disqualified") return CandidateOutcome::Status::disqualified;
  return CandidateOutcome::Status::evaluated;
}

DegeneracyFlag parse_flag(const std::string& s) {
  for (auto f : {DegeneracyFlag::rays_concurrent, DegeneracyFlag::rays_parallel,
                 DegeneracyFlag::camera_expressible_at_K, DegeneracyFlag::rank_deficient}) {
    if (to_string(f) == s) return f;
  }
  throw Error(ErrorCode::schema_error, "unknown degeneracy flag '" + s + "'");
}

}  // namespace

ResultFile make_result(const SolveReport& report, std::span<const Observation> observations,
                       const StackedTrajectory* truth) {
  ResultFile r;
  r.order = report.order_selected;
  r.method = report.method;
  r.coefficients = report.trajectory.coeffs();
  r.local_coefficients = report.local_trajectory.coeffs();
  r.time_map = report.time_map;
  r.ridge_param = report.ridge_param;
  r.objective = report.objective;
  r.residual_norm = report.residual_norm;
  r.condition_number = report.condition_number;
  r.design_rank = report.design_rank;
  r.candidates = report.candidates;
  r.degeneracy = report.degeneracy;

  std::vector<std::size_t> truth_index;
  if (truth) {
    std::string missing;
    for (std::size_t i = 0; i < observations.size(); ++i) {
      const auto it = std::find_if(truth->times.begin(), truth->times.end(), [&](double t) {
        return std::abs(t - observations[i].time) <= 1e-9;
      });
      if (it == truth->times.end()) {
        if (!missing.empty()) missing += ", ";
        missing += "row " + std::to_string(i + 1) + " (t=" + format_double(observations[i].time) + ")";
      } else {
        truth_index.push_back(static_cast<std::size_t>(it - truth->times.begin()));
      }
    }
    if (!missing.empty()) {
      throw Error(ErrorCode::time_mismatch, "truth has no sample for observation " + missing);
    }
  }

  double sq = 0.0;
  std::vector<double> times;
  std::vector<Vec3> cams, gt;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const Observation& o = observations[i];
    ResultPosition p;
    p.time = o.time;
    p.position = report.position_at(o.time);
    p.ray_error = i < report.ray_errors.size() ? report.ray_errors[i] : 0.0;
    if (truth) {
      const Vec3 g = truth->point(truth_index[i]);
      sq += (p.position - g).squaredNorm();  // same accumulation as the harness
      p.error = (p.position - g).norm();
      times.push_back(o.time);
      cams.push_back(o.camera_center);
      gt.push_back(g);
    }
    r.positions.push_back(p);
  }
  if (truth && !observations.empty()) {
    r.rms_error = std::sqrt(sq / static_cast<double>(observations.size()));
    try {
      r.eta = reconstructability_index(StackedTrajectory::from_points(times, cams),
                                       StackedTrajectory::from_points(times, gt), r.order);
    } catch (const Error&) {
      r.eta.reset();
    }
  }
  return r;
}

std::string serialize_result(const ResultFile& r) {
  json j;
  j["format"] = "monotraj-result";
  j["version"] = 1;
  j["order"] = r.order;
  j["method"] = std::string(to_string(r.method));
  j["coefficients"] = coeffs_to_json(r.coefficients);
  j["local_coefficients"] = coeffs_to_json(r.local_coefficients);
  j["time_map"] = {{"origin", r.time_map.origin}, {"scale", r.time_map.scale}};
  j["ridge_param"] = r.ridge_param;
  j["objective"] = r.objective;
  j["residual_norm"] = r.residual_norm;
  j["condition_number"] = number_or_string(r.condition_number);
  j["design_rank"] = r.design_rank;

  json cands = json::array();
  for (const auto& c : r.candidates) {
    cands.push_back({{"order", c.order},
                     {"status", std::string(status_name(c.status))},
                     {"objective", number_or_string(c.objective)},
                     {"note", c.note}});
  }
  j["candidates"] = cands;

  if (r.degeneracy) {
    const auto& d = *r.degeneracy;
    json flags = json::array();
    for (auto f : d.flags) flags.push_back(std::string(to_string(f)));
    json fit = json::object();
    for (const auto& [k, v] : d.camera_order_fit) fit[std::to_string(k)] = v;
    j["degeneracy"] = {
        {"order", d.order},
        {"flags", flags},
        {"common_point", d.common_point ? json::array({d.common_point->x(), d.common_point->y(),
                                                       d.common_point->z()})
                                        : json(nullptr)},
        {"common_point_residual", d.common_point_residual},
        {"camera_order_fit", fit},
        {"design_rank", d.design_rank}};
  } else {
    j["degeneracy"] = nullptr;
  }

  json pos = json::array();
  for (const auto& p : r.positions) {
    json e = {{"time", p.time},
              {"x", p.position.x()},
              {"y", p.position.y()},
              {"z", p.position.z()},
              {"ray_error", p.ray_error}};
    if (p.error) e["error"] = *p.error;
    pos.push_back(e);
  }
  j["positions"] = pos;
  if (r.rms_error) j["rms_error"] = *r.rms_error;
  if (r.eta) j["eta"] = number_or_string(*r.eta);
  return j.dump(2) + "\n";
}

ResultFile parse_result(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema_error, std::string("result file is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != "monotraj-result") {
      throw Error(ErrorCode::schema_error, "format: not a monotraj result file");
    }
    ResultFile r;
    r.order = j.at("order").get<int>();
    r.method = parse_solve_method(j.at("method").get<std::string>());
    r.coefficients = coeffs_from_json(j.at("coefficients"), "coefficients");
    r.local_coefficients = coeffs_from_json(j.at("local_coefficients"), "local_coefficients");
    r.time_map = TimeMap{j.at("time_map").at("origin").get<double>(),
                         j.at("time_map").at("scale").get<double>()};
    r.ridge_param = j.at("ridge_param").get<double>();
    r.objective = j.at("objective").get<double>();
    r.residual_norm = j.at("residual_norm").get<double>();
    r.condition_number = number_from(j.at("condition_number"));
    r.design_rank = j.at("design_rank").get<int>();
    for (const auto& c : j.at("candidates")) {
      r.candidates.push_back(CandidateOutcome{c.at("order").get<int>(),
                                              parse_status(c.at("status").get<std::string>()),
                                              number_from(c.at("objective")),
                                              c.at("note").get<std::string>()});
    }
    if (!j.at("degeneracy").is_null()) {
      const auto& dj = j.at("degeneracy");
      DegeneracyReport d;
      d.order = dj.at("order").get<int>();
      for (const auto& f : dj.at("flags")) d.flags.insert(parse_flag(f.get<std::string>()));
      if (!dj.at("common_point").is_null()) {
        const auto& cp = dj.at("common_point");
        d.common_point = Vec3(cp[0].get<double>(), cp[1].get<double>(), cp[2].get<double>());
      }
      d.common_point_residual = dj.at("common_point_residual").get<double>();
      for (const auto& [k, v] : dj.at("camera_order_fit").items()) {
        d.camera_order_fit[std::stoi(k)] = v.get<double>();
      }
      d.design_rank = dj.at("design_rank").get<int>();
      r.degeneracy = d;
    }
    for (const auto& p : j.at("positions")) {
      ResultPosition rp;
      rp.time = p.at("time").get<double>();
      rp.position = Vec3(p.at("x").get<double>(), p.at("y").get<double>(), p.at("z").get<double>());
      rp.ray_error = p.at("ray_error").get<double>();
      if (p.contains("error")) rp.error = p.at("error").get<double>();
      r.positions.push_back(rp);
    }
    if (j.contains("rms_error")) r.rms_error = j.at("rms_error").get<double>();
    if (j.contains("eta")) r.eta = number_from(j.at("eta"));
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema_error, std::string("result file: ") + e.what());
  }
}

void write_result_file(const std::filesystem::path& path, const ResultFile& result) {
  auto out = open_out(path);
  out << serialize_result(result);
}

ResultFile read_result_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_result(ss.str());
}

// ---------------------------------------------------------------------------
// Experiment config

namespace {

[[noreturn]] void config_fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::config_error, path + ": " + what);
}

double config_number(const json& j, const std::string& path) {
  if (!j.is_number()) config_fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) config_fail(path, "must be finite");
  return v;
}

double config_nonneg(const json& j, const std::string& path) {
  const double v = config_number(j, path);
  if (v < 0.0) config_fail(path, "must be >= 0");
  return v;
}

int config_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) config_fail(path, "expected an integer");
  return j.get<int>();
}

Vec3 config_vec3(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) config_fail(path, "expected an array of 3 numbers");
  return {config_number(j[0], path + "[0]"), config_number(j[1], path + "[1]"),
          config_number(j[2], path + "[2]")};
}

std::vector<double> config_number_list(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) config_fail(path, "expected a non-empty array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(config_number(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) config_fail(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) config_fail(path.empty() ? k : path + "." + k, "unknown field");
  }
}

sim::TargetMotion parse_target(const json& j, const std::string& path) {
  if (j.is_string()) {
    try {
      return sim::TargetMotion::preset(j.get<std::string>());
    } catch (const Error& e) {
      config_fail(path, e.what());
    }
  }
  check_keys(j, path, {"name", "coeffs"});
  if (!j.contains("name") || !j["name"].is_string()) config_fail(path + ".name", "expected a string");
  if (!j.contains("coeffs")) config_fail(path + ".coeffs", "required");
  const auto& c = j["coeffs"];
  if (!c.is_array() || c.size() != 3) config_fail(path + ".coeffs", "expected 3 rows");
  const std::size_t n = c[0].is_array() ? c[0].size() : 0;
  if (n == 0) config_fail(path + ".coeffs[0]", "expected a non-empty array");
  CoeffMatrix m(3, n);
  for (int r = 0; r < 3; ++r) {
    const std::string rp = path + ".coeffs[" + std::to_string(r) + "]";
    if (!c[r].is_array() || c[r].size() != n) config_fail(rp, "rows must have equal length");
    for (std::size_t k = 0; k < n; ++k) {
      m(r, static_cast<Eigen::Index>(k)) = config_number(c[r][k], rp + "[" + std::to_string(k) + "]");
    }
  }
  return {j["name"].get<std::string>(), PolynomialTrajectory(m)};
}

sim::CameraPath parse_camera(const json& j, const std::string& path) {
  if (j.is_string()) {
    if (j.get<std::string>() == "circle") return sim::CirclePath{};
    config_fail(path, "unknown camera preset '" + j.get<std::string>() + "'");
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    config_fail(path + ".type", "expected \"circle\", \"line\" or \"sampled\"");
  }
  const std::string type = j["type"].get<std::string>();
  if (type == "circle") {
    check_keys(j, path, {"type", "radius", "height", "angular_rate"});
    sim::CirclePath c;
    if (j.contains("radius")) c.radius = config_number(j["radius"], path + ".radius");
    if (j.contains("height")) c.height = config_number(j["height"], path + ".height");
    if (j.contains("angular_rate")) c.angular_rate = config_number(j["angular_rate"], path + ".angular_rate");
    return c;
  }
  if (type == "line") {
    check_keys(j, path, {"type", "origin", "velocity"});
    sim::LinePath l;
    if (j.contains("origin")) l.origin = config_vec3(j["origin"], path + ".origin");
    if (j.contains("velocity")) l.velocity = config_vec3(j["velocity"], path + ".velocity");
    return l;
  }
  if (type == "sampled") {
    check_keys(j, path, {"type", "times", "positions"});
    sim::SampledPath s;
    if (!j.contains("times")) config_fail(path + ".times", "required");
    if (!j.contains("positions")) config_fail(path + ".positions", "required");
    s.times = config_number_list(j["times"], path + ".times");
    const auto& p = j["positions"];
    if (!p.is_array() || p.size() != s.times.size()) {
      config_fail(path + ".positions", "must have one entry per time");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      s.positions.push_back(config_vec3(p[i], path + ".positions[" + std::to_string(i) + "]"));
    }
    return s;
  }
  config_fail(path + ".type", "unknown camera type '" + type + "'");
}

sim::NoiseSpec parse_noise(const json& j, const std::string& path) {
  if (j.is_string()) {
    try {
      return sim::NoiseSpec::preset(j.get<std::string>());
    } catch (const Error& e) {
      config_fail(path, e.what());
    }
  }
  check_keys(j, path,
             {"camera_pos_systematic_std", "camera_pos_random_std", "ray_angle_systematic_std",
              "ray_angle_random_std"});
  sim::NoiseSpec n;
  auto get = [&](const char* key, double& dst) {
    if (j.contains(key)) dst = config_nonneg(j[key], path + "." + key);
  };
  get("camera_pos_systematic_std", n.camera_pos_systematic_std);
  get("camera_pos_random_std", n.camera_pos_random_std);
  get("ray_angle_systematic_std", n.ray_angle_systematic_std);
  get("ray_angle_random_std", n.ray_angle_random_std);
  return n;
}

}  // namespace

sim::ExperimentConfig parse_experiment_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config_error, std::string("<root>: invalid JSON: ") + e.what());
  }
  check_keys(j, "",
             {"name", "description", "targets", "camera", "frame_rate", "windows", "occlusions",
              "noise", "methods", "orders", "candidate_orders", "trials", "seed",
              "time_normalization", "ridge_sign", "threads"});

  sim::ExperimentConfig cfg;
  if (j.contains("name")) {
    if (!j["name"].is_string()) config_fail("name", "expected a string");
    cfg.name = j["name"].get<std::string>();
  }
  if (j.contains("targets")) {
    const auto& t = j["targets"];
    if (!t.is_array() || t.empty()) config_fail("targets", "expected a non-empty array");
    cfg.targets.clear();
    for (std::size_t i = 0; i < t.size(); ++i) {
      cfg.targets.push_back(parse_target(t[i], "targets[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("camera")) cfg.camera = parse_camera(j["camera"], "camera");
  if (j.contains("frame_rate")) {
    cfg.frame_rate = config_number(j["frame_rate"], "frame_rate");
    if (cfg.frame_rate <= 0.0) config_fail("frame_rate", "must be > 0");
  }
  if (j.contains("windows")) {
    cfg.windows = config_number_list(j["windows"], "windows");
    for (std::size_t i = 0; i < cfg.windows.size(); ++i) {
      if (cfg.windows[i] <= 0.0) config_fail("windows[" + std::to_string(i) + "]", "must be > 0");
    }
  }
  if (j.contains("occlusions")) {
    cfg.occlusions = config_number_list(j["occlusions"], "occlusions");
    for (std::size_t i = 0; i < cfg.occlusions.size(); ++i) {
      if (cfg.occlusions[i] < 0.0 || cfg.occlusions[i] >= 1.0) {
        config_fail("occlusions[" + std::to_string(i) + "]", "must lie in [0, 1)");
      }
    }
  }
  if (j.contains("noise")) cfg.noise = parse_noise(j["noise"], "noise");
  if (j.contains("methods")) {
    const auto& m = j["methods"];
    if (!m.is_array() || m.empty()) config_fail("methods", "expected a non-empty array");
    cfg.methods.clear();
    for (std::size_t i = 0; i < m.size(); ++i) {
      const std::string p = "methods[" + std::to_string(i) + "]";
      if (!m[i].is_string()) config_fail(p, "expected \"ls\" or \"ridge\"");
      try {
        cfg.methods.push_back(parse_solve_method(m[i].get<std::string>()));
      } catch (const Error& e) {
        config_fail(p, e.what());
      }
    }
  }
  if (j.contains("orders")) {
    const auto& o = j["orders"];
    if (!o.is_array() || o.empty()) config_fail("orders", "expected a non-empty array");
    cfg.orders.clear();
    for (std::size_t i = 0; i < o.size(); ++i) {
      const std::string p = "orders[" + std::to_string(i) + "]";
      if (o[i].is_string() && o[i].get<std::string>() == "auto") {
        cfg.orders.push_back(sim::OrderSpec::autoselect());
      } else {
        const int k = config_int(o[i], p);
        if (k < 0) config_fail(p, "must be >= 0");
        cfg.orders.push_back(sim::OrderSpec::fixed(k));
      }
    }
  }
  if (j.contains("candidate_orders")) {
    const auto& c = j["candidate_orders"];
    if (!c.is_array() || c.empty()) config_fail("candidate_orders", "expected a non-empty array");
    cfg.candidate_orders.clear();
    for (std::size_t i = 0; i < c.size(); ++i) {
      const int k = config_int(c[i], "candidate_orders[" + std::to_string(i) + "]");
      if (k < 0) config_fail("candidate_orders[" + std::to_string(i) + "]", "must be >= 0");
      cfg.candidate_orders.push_back(k);
    }
  }
  if (j.contains("trials")) {
    cfg.trials = config_int(j["trials"], "trials");
    if (cfg.trials < 1) config_fail("trials", "must be >= 1");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) config_fail("seed", "expected a nonnegative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("time_normalization")) {
    if (!j["time_normalization"].is_boolean()) config_fail("time_normalization", "expected a boolean");
    cfg.solve_options.normalize_time = j["time_normalization"].get<bool>();
  }
  if (j.contains("ridge_sign")) {
    const auto& r = j["ridge_sign"];
    if (r == "standard") {
      cfg.solve_options.ridge_sign = RidgeSign::standard;
    } else if (r == "paper_literal") {
      cfg.solve_options.ridge_sign = RidgeSign::paper_literal;
    } else {
      config_fail("ridge_sign", "expected \"standard\" or \"paper_literal\"");
    }
  }
  if (j.contains("threads")) {
    const int t = config_int(j["threads"], "threads");
    if (t < 0) config_fail("threads", "must be >= 0");
    cfg.threads = static_cast<unsigned>(t);
  }
  cfg.validate();
  return cfg;
}

sim::ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

void write_aggregate_csv(std::ostream& out, const sim::ExperimentReport& report) {
  out << "target,window_s,occlusion,order,method,trials,failures,mean_rms_m,median_rms_m,"
         "std_rms_m,mean_rms_to_camera_m,selection_accuracy,mean_objective,mean_ridge_param\n";
  for (const auto& r : report.rows) {
    out << r.target << ',' << format_double(r.window) << ',' << format_double(r.occlusion) << ','
        << r.order_label << ',' << to_string(r.method) << ',' << r.trials << ',' << r.failures
        << ',' << format_double(r.mean_rms) << ',' << format_double(r.median_rms) << ','
        << format_double(r.std_rms) << ',' << format_double(r.mean_rms_to_camera) << ','
        << format_double(r.selection_accuracy) << ',' << format_double(r.mean_objective) << ','
        << format_double(r.mean_ridge_param) << '\n';
  }
}

void write_trials_csv(std::ostream& out, const sim::ExperimentReport& report) {
  out << "trial,target,window_s,occlusion,order,method,seed,observations,status,rms_m,"
         "rms_to_camera_m,selected_order,objective,ridge_param,eta\n";
  for (const auto& t : report.trials) {
    for (const auto& [method, m] : t.per_method) {
      out << t.trial << ',' << t.target << ',' << format_double(t.window) << ','
          << format_double(t.occlusion) << ',' << t.order_label << ',' << to_string(method) << ','
          << t.seed << ',' << t.observations << ',' << (m.ok ? "ok" : m.error) << ',';
      if (m.ok) {
        out << format_double(m.rms) << ',' << format_double(m.rms_to_camera) << ','
            << m.selected_order << ',' << format_double(m.objective) << ','
            << format_double(m.ridge_param) << ',' << format_double(m.eta);
      } else {
        out << ",,,,,";
      }
      out << '\n';
    }
  }
}

}  // namespace monotraj::io
