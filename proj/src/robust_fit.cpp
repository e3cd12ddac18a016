#include "serls/robust_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace serls {
namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorKind::kInvalidInput, msg);
}

double max_abs_diff(const Vector& a, const Vector& b) {
  return (a - b).lpNorm<Eigen::Infinity>();
}

}  // namespace

void RobustConfig::validate() const {
  require(max_iterations >= 1, "robust fit: max_iterations must be >= 1");
  require(!epsilon || (std::isfinite(*epsilon) && *epsilon > 0.0),
          "robust fit: epsilon must be positive");
  require(std::isfinite(m) && m > 0.0, "robust fit: m must be positive");
}

double huber_loss(double e, double k) {
  require(k > 0.0, "huber_loss: threshold k must be positive");
  const double a = std::abs(e);
  return a <= k ? e * e : 2.0 * k * a - k * k;
}

double weighted_median(const Vector& x, const Vector& w) {
  require(x.size() > 0, "weighted_median: empty input");
  require(x.size() == w.size(), "weighted_median: length mismatch");
  require(x.allFinite() && w.allFinite() && (w.array() >= 0.0).all(),
          "weighted_median: values must be finite and weights nonnegative");
  const double total = w.sum();
  require(total > 0.0, "weighted_median: weights are all zero");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&x](Eigen::Index a, Eigen::Index b) { return x[a] < x[b]; });
  // The slack absorbs summation rounding so exact halves resolve low.
  const double half = 0.5 * total * (1.0 - 8.0 * std::numeric_limits<double>::epsilon());
  double cumulative = 0.0;
  for (auto i : order) {
    cumulative += w[i];
    if (w[i] > 0.0 && cumulative >= half) return x[i];
  }
  return x[order.back()];
}

double robust_scale(const Vector& abs_errors, const Vector& w) {
  require((abs_errors.array() >= 0.0).all(), "robust_scale: negative absolute error");
  return kRobustScaleFactor * weighted_median(abs_errors, w);
}

Vector winsorize_residuals(const Vector& e, double k) {
  require(k > 0.0, "winsorize_residuals: threshold k must be positive");
  return e.cwiseMax(-k).cwiseMin(k);
}

void winsorize_outcome(const Vector& y, const Vector& fitted, double k,
                       Vector& e_star, Vector& y_star) {
  const auto n = y.size();
  e_star.resize(n);
  y_star.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = y[i] - fitted[i];
    if (std::abs(e) <= k) {
      e_star[i] = e;
      y_star[i] = y[i];
    } else {
      e_star[i] = e > 0.0 ? k : -k;
      y_star[i] = fitted[i] + e_star[i];
    }
  }
}

RobustFitResult fit_robust(const EngineeredProblem& prob, const RobustConfig& cfg) {
  cfg.validate();
  const Vector& y = prob.obs().y();
  const Vector& w = prob.w();
  const Matrix& xr = prob.xr();
  EngineeredSolver solver(prob);

  RobustFitResult out;
  Vector beta = solver.solve(y).beta;
  const double eps = cfg.epsilon.value_or(1e-6 * (1.0 + beta.lpNorm<Eigen::Infinity>()));
  out.epsilon = eps;

  int c = 1;
  Vector beta_o = beta;
  beta_o[0] = beta[0] + 2.0 * eps;
  double sigma = std::numeric_limits<double>::quiet_NaN();
  double k = sigma;
  const double degenerate_floor = 1e-12 * (1.0 + w.dot(y.cwiseAbs()));
  Vector e_star, y_star;

  while (max_abs_diff(beta_o, beta) > eps && c < cfg.max_iterations) {
    beta_o = beta;
    ++c;
    const Vector fitted = xr * beta;
    sigma = robust_scale((y - fitted).cwiseAbs(), w);
    k = cfg.m * sigma;
    if (sigma < degenerate_floor) {
      out.degenerate_scale = true;
      out.trace.push_back({c, sigma, k, 0.0});
      break;
    }
    winsorize_outcome(y, fitted, k, e_star, y_star);
    try {
      beta = solver.solve(y_star).beta;
    } catch (const Error& err) {
      throw Error(err.kind(), std::string(err.what()) + " (robust iteration " +
                                  std::to_string(c) + ")");
    }
    out.trace.push_back({c, sigma, k, max_abs_diff(beta_o, beta)});
  }

  out.beta = Coefficients(beta);
  out.iterations = c;
  const Vector fitted = xr * beta;
  if (out.degenerate_scale) {
    out.converged = true;
    out.sigma = sigma;
    out.k = 0.0;
    out.e_star = Vector::Zero(y.size());
    out.y_star = fitted;
    return out;
  }
  out.converged = max_abs_diff(beta_o, beta) <= eps;
  if (c == 1) {
    sigma = robust_scale((y - fitted).cwiseAbs(), w);
    k = cfg.m * sigma;
  }
  out.sigma = sigma;
  out.k = k;
  winsorize_outcome(y, fitted, k, out.e_star, out.y_star);
  return out;
}

RobustFitResult fit_nonrobust(const EngineeredProblem& prob) {
  const Vector& y = prob.obs().y();
  RobustFitResult out;
  out.beta = fit_engineered_ls(prob, y);
  const Vector fitted = prob.xr() * out.beta.beta();
  out.iterations = 1;
  out.converged = true;
  out.sigma = robust_scale((y - fitted).cwiseAbs(), prob.w());
  out.k = std::numeric_limits<double>::infinity();
  out.e_star = y - fitted;
  out.y_star = y;
  return out;
}

double huber_objective(const Coefficients& beta, const EngineeredProblem& prob,
                       double k) {
  require(k > 0.0, "huber_objective: threshold k must be positive");
  const Vector e = prob.obs().y() - score(prob.design(), beta);
  double total = 0.0;
  for (Eigen::Index i = 0; i < e.size(); ++i) total += prob.w()[i] * huber_loss(e[i], k);
  return total;
}

}  // namespace serls
