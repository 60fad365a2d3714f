#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "monotraj/cli.hpp"
#include "monotraj/io.hpp"
#include "monotraj/sim.hpp"
#include "test_util.hpp"

using namespace monotraj;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = cli::run(args, out, err);
  return {status, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("monotraj_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

bool single_error_line(const std::string& err, const std::string& code) {
  return err.rfind("error: " + code + ": ", 0) == 0 &&
         std::count(err.begin(), err.end(), '\n') == 1;
}

}  // namespace

TEST_F(CliTest, NoiseFreeLinearAutoOrder) {
  ASSERT_EQ(run({"simulate", "--target", "linear", "--window", "3", "--noise", "none", "--out", path("sim")}).status, 0);
  const auto r = run({"solve", path("sim/observations.csv"), "--auto-order", "--out", path("r.json")});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("order: 1 (selected)"), std::string::npos);
  const auto res = io::read_result_file(path("r.json"));
  EXPECT_EQ(res.order, 1);
  EXPECT_LT(fixtures::max_rel_diff(res.coefficients, fixtures::linear_target().coeffs()), 1e-8);
}

TEST_F(CliTest, TooFewObservationsNamesMinimum) {
  std::ofstream(path("two.csv")) << "time,cx,cy,cz,lx,ly,lz\n0,0,0,100,0,0,-1\n1,10,0,100,0,0.6,-0.8\n";
  const auto r = run({"solve", path("two.csv"), "--order", "1"});
  EXPECT_NE(r.status, 0);
  EXPECT_TRUE(single_error_line(r.err, "too_few_observations")) << r.err;
  EXPECT_NE(r.err.find("at least 3"), std::string::npos);
}

TEST_F(CliTest, ConcurrentRaysAreFlagged) {
  std::ofstream f(path("concurrent.csv"));
  f << "time,cx,cy,cz,lx,ly,lz\n";
  const Vec3 p(5, 5, 5);
  f.precision(17);
  for (int j = 0; j < 10; ++j) {
    const Vec3 c = fixtures::circle_camera(j);
    const Vec3 l = (p - c).normalized();
    f << j << ',' << c.x() << ',' << c.y() << ',' << c.z() << ',' << l.x() << ',' << l.y() << ','
      << l.z() << '\n';
  }
  f.close();
  const auto r = run({"solve", path("concurrent.csv"), "--order", "0"});
  EXPECT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("rays_concurrent"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("common_point"), std::string::npos);
}

TEST_F(CliTest, RankDeficientPrintsReportThenFails) {
  std::ofstream f(path("line.csv"));
  f << "time,cx,cy,cz,lx,ly,lz\n";
  for (int j = 0; j < 6; ++j) f << j << ",0,0," << j << ",0,0,1\n";
  f.close();
  const auto r = run({"solve", path("line.csv"), "--order", "1", "--method", "ls"});
  EXPECT_NE(r.status, 0);
  EXPECT_TRUE(single_error_line(r.err, "rank_deficient")) << r.err;
  EXPECT_NE(r.out.find("rays_concurrent"), std::string::npos);
}

TEST_F(CliTest, SchemaErrorNamesLine) {
  std::ofstream(path("bad.csv")) << "time,cx,cy,cz,lx,ly,lz\n0,0,0,0,0,0,1\n1,0,0,0,0,0\n";
  const auto r = run({"solve", path("bad.csv")});
  EXPECT_NE(r.status, 0);
  EXPECT_TRUE(single_error_line(r.err, "schema_error"));
  EXPECT_NE(r.err.find("line 3"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsAreNonzero) {
  EXPECT_NE(run({}).status, 0);
  EXPECT_NE(run({"solve"}).status, 0);
  EXPECT_NE(run({"solve", "x.csv", "--method", "kernel"}).status, 0);
  const auto missing = run({"solve", path("nope.csv")});
  EXPECT_TRUE(single_error_line(missing.err, "io_error"));
}

TEST_F(CliTest, ReconstructabilitySentinels) {
  ASSERT_EQ(run({"simulate", "--noise", "none", "--out", path("sim")}).status, 0);
  auto r = run({"reconstructability", path("sim/camera.csv"), path("sim/truth.csv"), "--order", "1"});
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("eta: inf\n"), std::string::npos) << r.out;

  r = run({"reconstructability", path("sim/camera.csv"), path("sim/camera.csv"), "--order", "1"});
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("eta: 1\n"), std::string::npos) << r.out;

  // Straight camera, circling target.
  std::ofstream cam(path("line_cam.csv")), tgt(path("circle_tgt.csv"));
  cam.precision(17);
  tgt.precision(17);
  cam << "time,x,y,z\n";
  tgt << "time,x,y,z\n";
  for (int j = 0; j <= 60; ++j) {
    const double t = j / 10.0;
    cam << t << ',' << -50 + 8 * t << ',' << 20 + 3 * t << ",100\n";
    tgt << t << ',' << 30 * std::cos(t) << ',' << 30 * std::sin(t) << ",0\n";
  }
  cam.close();
  tgt.close();
  r = run({"reconstructability", path("line_cam.csv"), path("circle_tgt.csv"), "--order", "1"});
  EXPECT_EQ(r.status, 0);
  const auto pos = r.out.find("eta: ");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_LT(std::stod(r.out.substr(pos + 5)), 1.0);
  EXPECT_NE(r.out.find("camera_expressible_at_K"), std::string::npos);

  // Both expressible: diagnostic, still exit 0.
  r = run({"reconstructability", path("line_cam.csv"), path("line_cam.csv"), "--order", "1"});
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("eta: indeterminate"), std::string::npos);
}

TEST_F(CliTest, ReconstructabilityTimeMismatchListsRows) {
  std::ofstream(path("a.csv")) << "time,x,y,z\n0,0,0,0\n1,1,0,0\n2,2,1,0\n";
  std::ofstream(path("b.csv")) << "time,x,y,z\n0,0,0,0\n1.5,1,0,0\n2,2,1,0\n";
  const auto r = run({"reconstructability", path("a.csv"), path("b.csv"), "--order", "1"});
  EXPECT_NE(r.status, 0);
  EXPECT_TRUE(single_error_line(r.err, "time_mismatch")) << r.err;
  EXPECT_NE(r.err.find("row 2"), std::string::npos);
}

TEST_F(CliTest, SolveReproducesHarnessBitForBit) {
  const std::uint64_t master = 2024;
  const std::size_t trial = 3;
  ASSERT_EQ(run({"simulate", "--target", "accelerated", "--window", "4", "--noise", "high",
                 "--occlusion", "0.2", "--seed", std::to_string(master), "--trial",
                 std::to_string(trial), "--out", path("sim")})
                .status,
            0);
  for (const std::string method : {"ls", "ridge"}) {
    const auto r = run({"solve", path("sim/observations.csv"), "--order", "2", "--method", method,
                        "--truth", path("sim/truth.csv"), "--out", path(method + ".json")});
    ASSERT_EQ(r.status, 0) << r.err;
    const auto file = io::read_result_file(path(method + ".json"));

    // Same trial in-process.
    sim::ScenarioSpec spec;
    spec.target = sim::TargetMotion::accelerated();
    spec.duration = 4;
    const auto trial_data = sim::realize_trial(sim::generate_scenario(spec), sim::NoiseSpec::high(),
                                               0.2, sim::trial_seed(master, trial), 5);
    const auto rep = solve(trial_data.observations, 2, parse_solve_method(method));
    EXPECT_EQ(file.coefficients, rep.trajectory.coeffs());
    EXPECT_EQ(file.ridge_param, rep.ridge_param);
    EXPECT_EQ(file.objective, rep.objective);

    sim::ExperimentConfig cfg;
    cfg.targets = {sim::TargetMotion::accelerated()};
    cfg.windows = {4.0};
    cfg.occlusions = {0.2};
    cfg.orders = {sim::OrderSpec::fixed(2)};
    cfg.trials = static_cast<int>(trial) + 1;
    cfg.seed = master;
    const auto exp = sim::run_experiment(cfg);
    const auto& out = exp.trials.at(trial).per_method.at(parse_solve_method(method));
    ASSERT_TRUE(out.ok);
    ASSERT_TRUE(file.rms_error.has_value());
    EXPECT_EQ(*file.rms_error, out.rms);
    ASSERT_TRUE(file.eta.has_value());
    EXPECT_EQ(*file.eta, out.eta);
  }
}

TEST_F(CliTest, ExperimentIsByteIdentical) {
  const std::string preset = std::string(MONOTRAJ_PRESET_DIR) + "/fig12a.json";
  ASSERT_EQ(run({"experiment", preset, "--out", path("a"), "--trials", "1", "--seed", "99"}).status, 0);
  ASSERT_EQ(run({"experiment", preset, "--out", path("b"), "--trials", "1", "--seed", "99", "--threads", "3"}).status, 0);
  EXPECT_EQ(slurp(path("a/fig12a_trials.csv")), slurp(path("b/fig12a_trials.csv")));
  EXPECT_EQ(slurp(path("a/fig12a_aggregate.csv")), slurp(path("b/fig12a_aggregate.csv")));
  EXPECT_FALSE(slurp(path("a/fig12a_trials.csv")).empty());
}

TEST_F(CliTest, ExperimentConfigErrorsHaveFieldPaths) {
  std::ofstream(path("bad.json")) << R"({"name": "x", "windows": [1, -2]})";
  const auto r = run({"experiment", path("bad.json"), "--out", path("o")});
  EXPECT_NE(r.status, 0);
  EXPECT_TRUE(single_error_line(r.err, "config_error"));
  EXPECT_NE(r.err.find("windows[1]"), std::string::npos);
}

TEST_F(CliTest, PixelSchemaEndToEnd) {
  std::ofstream(path("k.csv")) << "camera_id,fx,fy,skew,ppx,ppy\nc,1000,1000,0,500,400\n";
  std::ofstream f(path("px.csv"));
  f.precision(17);
  f << "time,cx,cy,cz,r11,r12,r13,r21,r22,r23,r31,r32,r33,u,v,camera_id\n";
  for (int j = 0; j <= 30; ++j) {
    const double t = j / 10.0;
    const Vec3 c = fixtures::circle_camera(t);
    const Vec3 p = fixtures::linear_target().eval(t);
    // Looking straight down: R = diag(1, -1, -1) keeps det = 1.
    const Mat3 r = Vec3(1, -1, -1).asDiagonal();
    const Vec3 cam = r * (p - c);
    f << t << ',' << c.x() << ',' << c.y() << ',' << c.z() << ",1,0,0,0,-1,0,0,0,-1,"
      << 1000 * cam.x() / cam.z() + 500 << ',' << 1000 * cam.y() / cam.z() + 400 << ",c\n";
  }
  f.close();
  const auto r = run({"solve", path("px.csv"), "--intrinsics", path("k.csv"), "--order", "1",
                      "--out", path("px.json")});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_LT(fixtures::max_rel_diff(io::read_result_file(path("px.json")).coefficients,
                                   fixtures::linear_target().coeffs()),
            1e-8);
}
