#pragma once

// Brute-force reference computations used to check the library. Everything
// is built from scratch in long double with plain loops: no factorizations
// shared with the code under test.

#include <Eigen/Core>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "monotraj/geometry.hpp"

namespace monotraj::oracle {

using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LVec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

/// Gauss-Jordan elimination with partial pivoting; returns M^-1.
inline LMat gauss_jordan_inverse(LMat m) {
  const Eigen::Index n = m.rows();
  LMat inv = LMat::Identity(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index piv = c;
    for (Eigen::Index r = c + 1; r < n; ++r) {
      if (std::fabs(m(r, c)) > std::fabs(m(piv, c))) piv = r;
    }
    if (m(piv, c) == 0.0L) throw std::runtime_error("oracle: singular matrix");
    m.row(c).swap(m.row(piv));
    inv.row(c).swap(inv.row(piv));
    const long double d = m(c, c);
    m.row(c) /= d;
    inv.row(c) /= d;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == c) continue;
      const long double f = m(r, c);
      if (f == 0.0L) continue;
      m.row(r) -= f * m.row(c);
      inv.row(r) -= f * inv.row(c);
    }
  }
  return inv;
}

struct System {
  LMat a;
  LVec b;
};

/// Stacks (I - l l^T) [I3 (x) (1, u, ..., u^K)] and (I - l l^T) C with
/// u = (t - origin) / scale.
inline System assemble(std::span<const Observation> obs, int order, long double origin = 0.0L,
                       long double scale = 1.0L) {
  const Eigen::Index n = static_cast<Eigen::Index>(obs.size());
  const int m = order + 1;
  System s{LMat::Zero(3 * n, 3 * m), LVec::Zero(3 * n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = obs[i];
    long double v[3][3];
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        v[r][c] = (r == c ? 1.0L : 0.0L) - static_cast<long double>(o.ray(r)) * o.ray(c);
      }
    }
    for (int r = 0; r < 3; ++r) {
      const long double u = (o.time - origin) / scale;
      long double tp = 1.0L;
      for (int k = 0; k < m; ++k) {
        for (int axis = 0; axis < 3; ++axis) s.a(3 * i + r, axis * m + k) = v[r][axis] * tp;
        tp *= u;
      }
      for (int c = 0; c < 3; ++c) s.b(3 * i + r) += v[r][c] * o.camera_center(c);
    }
  }
  return s;
}

inline LVec least_squares(const System& s) {
  return gauss_jordan_inverse(s.a.transpose() * s.a) * (s.a.transpose() * s.b);
}

/// r = t d0^2 / (b^T A^T A b), d0^2 = B^T (I - A (A^T A)^-1 A^T) B / (n - t).
inline long double hkb(const System& s) {
  const Eigen::Index n = s.a.rows(), t = s.a.cols();
  const LMat proj = LMat::Identity(n, n) -
                    s.a * gauss_jordan_inverse(s.a.transpose() * s.a) * s.a.transpose();
  const long double d0 = s.b.dot(proj * s.b) / static_cast<long double>(n - t);
  const LVec beta = least_squares(s);
  const long double energy = beta.dot(s.a.transpose() * s.a * beta);
  return static_cast<long double>(t) * d0 / energy;
}

inline LVec ridge(const System& s, long double r) {
  LMat normal = s.a.transpose() * s.a;
  for (Eigen::Index i = 0; i < normal.rows(); ++i) normal(i, i) += r;
  return gauss_jordan_inverse(normal) * (s.a.transpose() * s.b);
}

/// Per-axis polynomial regression residual, combined in quadrature.
inline double polynomial_fit_residual(std::span<const double> times, std::span<const Vec3> pts,
                                      int order) {
  const Eigen::Index n = static_cast<Eigen::Index>(times.size());
  LMat v(n, order + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    long double tp = 1.0L;
    for (int k = 0; k <= order; ++k) {
      v(i, k) = tp;
      tp *= times[i];
    }
  }
  const LMat pinv = gauss_jordan_inverse(v.transpose() * v) * v.transpose();
  long double sq = 0.0L;
  for (int axis = 0; axis < 3; ++axis) {
    LVec y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = pts[i](axis);
    const LVec res = y - v * (pinv * y);
    sq += res.squaredNorm();
  }
  return static_cast<double>(std::sqrt(sq));
}

template <typename M>
double rel_diff(const M& a, const LVec& b) {
  const LVec d = a.template cast<long double>() - b;
  return static_cast<double>(d.norm() / std::max<long double>(b.norm(), 1e-300L));
}

}  // namespace monotraj::oracle
