#include <gtest/gtest.h>

#include <random>

#include "monotraj/error.hpp"
#include "monotraj/estimator.hpp"
#include "monotraj/reconstructability.hpp"
#include "oracle.hpp"
#include "test_util.hpp"

using namespace monotraj;
using fixtures::circle_camera;
using fixtures::sample_times;

namespace {

template <typename F>
StackedTrajectory sample(F f, const std::vector<double>& times) {
  std::vector<Vec3> pts;
  for (double t : times) pts.push_back(f(t));
  return StackedTrajectory::from_points(times, pts);
}

StackedTrajectory transform(const StackedTrajectory& s, const Mat3& r, const Vec3& shift,
                            double scale) {
  std::vector<Vec3> pts;
  for (const auto& p : s.points()) pts.push_back(scale * (r * p) + shift);
  return StackedTrajectory::from_points(s.times, pts);
}

auto line_camera = [](double t) { return Vec3(-50 + 8 * t, 20 + 3 * t, 100); };
auto gentle_camera = [](double t) { return Vec3(-50 + 8 * t, 20 + 0.4 * t * t, 100); };
auto circle_target = [](double t) { return Vec3(30 * std::cos(t), 30 * std::sin(t), 0); };

}  // namespace

TEST(Stacked, TimeMajorOrdering) {
  const std::vector<double> t{0, 1};
  const std::vector<Vec3> p{Vec3(1, 2, 3), Vec3(4, 5, 6)};
  const auto s = StackedTrajectory::from_points(t, p);
  Eigen::VectorXd expect(6);
  expect << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(s.vector, expect);
  EXPECT_EQ(s.points(), p);
}

TEST(NullSpaceResidual, PolynomialIsInColumnSpace) {
  const auto times = sample_times(30);
  const auto s = sample([](double t) { return fixtures::accelerated_target().eval(t); }, times);
  EXPECT_LT(null_space_residual(s, 2), 1e-8 * s.vector.norm());
  EXPECT_LT(null_space_residual(s, 3), 1e-8 * s.vector.norm());
  EXPECT_GT(null_space_residual(s, 1), 1.0);
}

TEST(NullSpaceResidual, CircleCameraIsNotLinear) {
  EXPECT_GT(null_space_residual(sample(circle_camera, sample_times(61)), 1), 1.0);
}

TEST(NullSpaceResidual, MatchesPerAxisRegression) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> n(0, 10);
  for (int trial = 0; trial < 20; ++trial) {
    const auto times = sample_times(15 + trial, 5.0);
    std::vector<Vec3> pts;
    for (std::size_t i = 0; i < times.size(); ++i) pts.push_back(Vec3(n(rng), n(rng), n(rng)));
    const auto s = StackedTrajectory::from_points(times, pts);
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 3; ++k) {
      const double got = null_space_residual(s, k);
      EXPECT_NEAR(got, oracle::polynomial_fit_residual(times, pts, k), 1e-9 * got);
      EXPECT_LE(got, prev * (1 + 1e-12));
      prev = got;
    }
  }
}

TEST(NullSpaceResidual, RepeatedTimesAreRejected) {
  const std::vector<double> t{1, 1, 1};
  const std::vector<Vec3> p{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
  EXPECT_THROW(null_space_residual(StackedTrajectory::from_points(t, p), 1), Error);
}

TEST(Eta, LinearTargetIsInfinite) {
  const auto times = sample_times(61);
  const double eta = reconstructability_index(
      sample(circle_camera, times), sample([](double t) { return fixtures::linear_target().eval(t); }, times), 1);
  EXPECT_TRUE(std::isinf(eta) && eta > 0);
}

TEST(Eta, IdenticalTrajectoriesGiveOne) {
  const auto cam = sample(circle_camera, sample_times(61));
  EXPECT_EQ(reconstructability_index(cam, cam, 1), 1.0);
}

TEST(Eta, StraightCameraCircularTargetBelowOne) {
  const auto times = sample_times(61);
  EXPECT_LT(reconstructability_index(sample(line_camera, times), sample(circle_target, times), 1), 1.0);
}

TEST(Eta, OrdersCameraPathsByCurvature) {
  const auto times = sample_times(61);
  const auto target = sample(circle_target, times);
  const double straight = reconstructability_index(sample(line_camera, times), target, 1);
  const double gentle = reconstructability_index(sample(gentle_camera, times), target, 1);
  const double circle = reconstructability_index(sample(circle_camera, times), target, 1);
  EXPECT_LT(straight, gentle);
  EXPECT_LT(gentle, circle);
  // Oracle for the middle value.
  const auto cam_pts = sample(gentle_camera, times).points();
  const double expect = oracle::polynomial_fit_residual(times, cam_pts, 1) /
                        oracle::polynomial_fit_residual(times, target.points(), 1);
  EXPECT_NEAR(gentle, expect, 1e-9 * expect);
}

TEST(Eta, IndeterminateAndMismatch) {
  const auto times = sample_times(20);
  const auto a = sample(line_camera, times);
  const auto b = sample([](double t) { return fixtures::linear_target().eval(t); }, times);
  try {
    reconstructability_index(a, b, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::indeterminate);
  }
  auto shifted = b;
  shifted.times[3] += 0.01;
  try {
    reconstructability_index(a, shifted, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::time_mismatch);
  }
}

TEST(Eta, InvariantUnderRigidMotionAndScaling) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-100, 100), s(0.01, 100);
  const auto times = sample_times(41);
  const auto cam = sample(circle_camera, times);
  const auto tgt = sample([](double t) { return fixtures::accelerated_target().eval(t); }, times);
  for (int k : {0, 1}) {
    const double eta = reconstructability_index(cam, tgt, k);
    for (int i = 0; i < 20; ++i) {
      const Mat3 r = fixtures::random_rotation(rng);
      const Vec3 shift(u(rng), u(rng), u(rng));
      const double rigid = reconstructability_index(transform(cam, r, shift, 1.0),
                                                    transform(tgt, r, shift, 1.0), k);
      EXPECT_LT(std::abs(rigid - eta) / eta, 1e-8);
      const double scale = s(rng);
      const Vec3 center(u(rng), u(rng), u(rng));
      const Vec3 about = center - scale * center;
      const double scaled = reconstructability_index(transform(cam, Mat3::Identity(), about, scale),
                                                     transform(tgt, Mat3::Identity(), about, scale), k);
      EXPECT_LT(std::abs(scaled - eta) / eta, 1e-8);
    }
  }
}

TEST(Degeneracy, StaticCameraIsExpressibleAtEveryOrder) {
  std::mt19937_64 rng(3);
  std::vector<Observation> obs;
  for (int j = 0; j < 10; ++j) obs.push_back(make_observation(j, Vec3(1, 2, 3), fixtures::random_unit(rng)));
  for (int k = 0; k <= 3; ++k) {
    const auto rep = detect_degeneracy(obs, k);
    EXPECT_TRUE(rep.has(DegeneracyFlag::camera_expressible_at_K)) << k;
    EXPECT_EQ(rep.camera_order_fit.size(), static_cast<std::size_t>(k + 1));
  }
}

TEST(Degeneracy, SharedLineIsConcurrentAndRankDeficient) {
  const Vec3 dir = Vec3(0, 0.6, 0.8);
  std::vector<Observation> obs;
  for (int j = 0; j < 8; ++j) obs.push_back(make_observation(j, Vec3(1, 1, 1) + (j * j) * dir, dir));
  const auto rep = detect_degeneracy(obs, 1);
  EXPECT_TRUE(rep.has(DegeneracyFlag::rays_concurrent));
  EXPECT_TRUE(rep.has(DegeneracyFlag::rank_deficient));
}

TEST(Degeneracy, ParallelRaysImplyConcurrent) {
  const Vec3 dir = Vec3(0, 0, 1);
  std::vector<Observation> obs;
  for (int j = 0; j < 8; ++j) obs.push_back(make_observation(j, Vec3(j, std::sin(j), 0), dir));
  const auto rep = detect_degeneracy(obs, 0);
  EXPECT_TRUE(rep.has(DegeneracyFlag::rays_parallel));
  EXPECT_TRUE(rep.has(DegeneracyFlag::rays_concurrent));
  EXPECT_FALSE(rep.common_point.has_value());
}

TEST(Degeneracy, RaysThroughOnePoint) {
  const Vec3 p(5, -3, 2);
  std::vector<Observation> obs;
  for (int j = 0; j < 10; ++j) {
    const Vec3 c = circle_camera(j);
    obs.push_back(make_observation(j, c, (p - c).normalized()));
  }
  const auto rep = detect_degeneracy(obs, 1);
  EXPECT_TRUE(rep.has(DegeneracyFlag::rays_concurrent));
  ASSERT_TRUE(rep.common_point.has_value());
  EXPECT_LT((*rep.common_point - p).norm(), 1e-8);
}

TEST(Degeneracy, CircleCameraLinearTargetIsClean) {
  const auto obs = fixtures::exact_observations(fixtures::linear_target(), circle_camera, sample_times(61));
  const auto rep = detect_degeneracy(obs, 1);
  EXPECT_FALSE(rep.any());
  EXPECT_EQ(rep.design_rank, 6);
  for (const auto& [k, fit] : rep.camera_order_fit) EXPECT_GT(fit, 1e-6) << k;
  EXPECT_GT(rep.common_point_residual, 1e-6);
}

TEST(Degeneracy, ExpressibleCameraPullsEstimateOntoCameraPath) {
  const auto times = sample_times(41);
  const auto obs = fixtures::exact_observations(fixtures::accelerated_target(), line_camera, times);
  EXPECT_TRUE(detect_degeneracy(obs, 1).has(DegeneracyFlag::camera_expressible_at_K));
  const auto rep = solve(obs, 1, SolveMethod::least_squares);
  double to_cam = 0, to_truth = 0;
  for (double t : times) {
    to_cam += (rep.position_at(t) - line_camera(t)).squaredNorm();
    to_truth += (rep.position_at(t) - fixtures::accelerated_target().eval(t)).squaredNorm();
  }
  EXPECT_LT(to_cam, to_truth);
}
