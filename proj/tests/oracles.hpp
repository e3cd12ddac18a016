#pragma once

// Independent reference computations used only by tests. None of these share
// code with the library's solver paths.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>

namespace serls::oracle {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Solves [H A'; A 0][x; nu] = [-f; b] with full-pivot LU.
inline std::pair<Vector, Vector> kkt_equality_solve(const Matrix& h, const Vector& f,
                                                    const Matrix& a, const Vector& b) {
  const auto n = h.rows();
  const auto m = a.rows();
  Matrix k = Matrix::Zero(n + m, n + m);
  k.topLeftCorner(n, n) = h;
  k.topRightCorner(n, m) = a.transpose();
  k.bottomLeftCorner(m, n) = a;
  Vector rhs(n + m);
  rhs << -f, b;
  const Vector sol = k.fullPivLu().solve(rhs);
  return {sol.head(n), sol.tail(m)};
}

/// (Xr'WXr)^-1 Xr'Wy by explicit loops and a Householder solve.
inline Vector weighted_normal_equations(const Matrix& xr, const Vector& w, const Vector& y) {
  const auto n = xr.rows();
  const auto p = xr.cols();
  Matrix g = Matrix::Zero(p, p);
  Vector r = Vector::Zero(p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index a = 0; a < p; ++a) {
      r[a] += w[i] * xr(i, a) * y[i];
      for (Eigen::Index b = 0; b < p; ++b) g(a, b) += w[i] * xr(i, a) * xr(i, b);
    }
  return g.householderQr().solve(r);
}

/// Naive triple loop matrix-vector product.
inline Vector matvec(const Matrix& a, const Vector& x) {
  Vector out = Vector::Zero(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out[i] += a(i, j) * x[j];
  return out;
}

inline double weighted_sum_squares(const Vector& e, const Vector& w) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < e.size(); ++i) s += w[i] * e[i] * e[i];
  return s;
}

/// Golden-section minimization of a convex function on [lo, hi].
inline double golden_section(const std::function<double(double)>& fn, double lo, double hi,
                             int iterations = 200) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = fn(c), fd = fn(d);
  for (int i = 0; i < iterations && (b - a) > 1e-13 * (1.0 + std::abs(a) + std::abs(b)); ++i) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - g * (b - a); fc = fn(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + g * (b - a); fd = fn(d);
    }
  }
  return 0.5 * (a + b);
}

inline double huber(double e, double k) {
  return std::abs(e) <= k ? e * e : 2.0 * k * std::abs(e) - k * k;
}

/// Minimizes sum w_i huber(y_i - b0 - b1 x_i; k) by nested golden sections
/// (the profile over b0 of a jointly convex function is convex in b1).
inline std::pair<double, double> huber_line_fit(const Vector& x, const Vector& y,
                                                const Vector& w, double k, double b0_lo,
                                                double b0_hi, double b1_lo, double b1_hi) {
  auto objective = [&](double b0, double b1) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += w[i] * huber(y[i] - b0 - b1 * x[i], k);
    return s;
  };
  auto best_b0 = [&](double b1) {
    return golden_section([&](double b0) { return objective(b0, b1); }, b0_lo, b0_hi);
  };
  const double b1 = golden_section([&](double s) { return objective(best_b0(s), s); }, b1_lo, b1_hi);
  return {best_b0(b1), b1};
}

/// Brute-force minimizer of sum w|x - m| over candidate values m = x_i
/// (the objective is piecewise linear with kinks only at the data). Returns
/// the minimum objective.
inline double min_abs_deviation(const Vector& x, const Vector& w) {
  double best = INFINITY;
  for (Eigen::Index c = 0; c < x.size(); ++c) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += w[i] * std::abs(x[i] - x[c]);
    best = std::min(best, s);
  }
  return best;
}

inline double abs_deviation(const Vector& x, const Vector& w, double m) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += w[i] * std::abs(x[i] - m);
  return s;
}

/// Random symmetric positive definite matrix with eigenvalues in [lo, hi].
inline Matrix random_spd(std::mt19937_64& rng, Eigen::Index n, double lo = 0.5, double hi = 5.0) {
  std::normal_distribution<double> g;
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = g(rng);
  const Matrix q = m.householderQr().householderQ();
  std::uniform_real_distribution<double> u(lo, hi);
  Vector d(n);
  for (Eigen::Index i = 0; i < n; ++i) d[i] = u(rng);
  Matrix h = q * d.asDiagonal() * q.transpose();
  return 0.5 * (h + h.transpose());
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> g;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

inline Vector random_vector(std::mt19937_64& rng, Eigen::Index n) {
  return random_matrix(rng, n, 1).col(0);
}

}  // namespace serls::oracle
