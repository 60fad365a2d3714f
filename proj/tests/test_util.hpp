#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>
#include <cmath>
#include <random>
#include <vector>

#include "monotraj/geometry.hpp"
#include "monotraj/trajectory.hpp"
#include "monotraj/estimator.hpp"

namespace monotraj::fixtures {

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-3);
  return v.normalized();
}

inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Matrix3d m;
  for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = n(rng);
  // Gram-Schmidt, then fix the handedness.
  Mat3 q;
  for (int c = 0; c < 3; ++c) {
    Vec3 v = m.col(c);
    for (int p = 0; p < c; ++p) v -= q.col(p).dot(v) * q.col(p);
    q.col(c) = v.normalized();
  }
  if (q.determinant() < 0) q.col(2) = -q.col(2);
  return q;
}

inline Vec3 circle_camera(double t) {
  const double w = M_PI / 10.0;
  return {100.0 * std::sin(w * t), 100.0 - 100.0 * std::cos(w * t), 100.0};
}

inline PolynomialTrajectory linear_target() {
  CoeffMatrix c(3, 2);
  c << 10, 5, 0, 5, 0, 1;
  return PolynomialTrajectory(c);
}

inline PolynomialTrajectory accelerated_target() {
  CoeffMatrix c(3, 3);
  c << 10, 0, 1, 13, 0, 2, 0, 0, 0.5;
  return PolynomialTrajectory(c);
}

/// Exact rays from a camera path toward a target at the given times.
template <typename CameraFn>
std::vector<Observation> exact_observations(const PolynomialTrajectory& target, CameraFn camera,
                                            const std::vector<double>& times) {
  std::vector<Observation> obs;
  for (double t : times) {
    const Vec3 c = camera(t);
    const Vec3 d = target.eval(t) - c;
    obs.push_back(Observation{t, c, d.normalized(), std::nullopt});
  }
  return obs;
}

inline std::vector<double> sample_times(int n, double rate = 10.0) {
  std::vector<double> t;
  for (int j = 0; j < n; ++j) t.push_back(j / rate);
  return t;
}

inline double max_rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

// Perturb each ray by a small rotation so the system is inconsistent.
inline std::vector<Observation> jitter(std::vector<Observation> obs, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  for (auto& o : obs) {
    const Vec3 axis = o.ray.cross(random_unit(rng)).normalized();
    o.ray = (Eigen::AngleAxisd(n(rng), axis) * o.ray).normalized();
  }
  return obs;
}

struct RandomCase {
  std::vector<Observation> obs;
  int order;
};

inline RandomCase random_case(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kd(0, 2);
  std::uniform_real_distribution<double> u(-20, 20);
  const int k = kd(rng);
  // At least one redundant equation, so the noisy system is inconsistent.
  std::uniform_int_distribution<int> nd((3 * (k + 1)) / 2 + 1, 8);
  const int n = nd(rng);
  CoeffMatrix c(3, k + 1);
  for (Eigen::Index j = 0; j < c.size(); ++j) c.data()[j] = u(rng);
  c(2, 0) += 60;  // keep the target away from the cameras
  std::vector<double> times;
  for (int j = 0; j < n; ++j) times.push_back(0.3 * j + 0.1 * std::abs(u(rng)) / 20.0);
  std::vector<Vec3> cams;
  for (int j = 0; j < n; ++j) cams.push_back(Vec3(u(rng), u(rng), u(rng) - 40));
  std::size_t idx = 0;
  auto obs = exact_observations(PolynomialTrajectory(c), [&](double) { return cams[idx++]; }, times);
  return {jitter(obs, 0.01, rng()), k};
}

}  // namespace monotraj::fixtures
