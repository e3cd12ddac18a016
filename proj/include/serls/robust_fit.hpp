#pragma once

#include <optional>
#include <vector>

#include "serls/engineered_ls.hpp"

namespace serls {

/// The constant multiplying the weighted median absolute residual.
inline constexpr double kRobustScaleFactor = 1.483;

struct RobustConfig {
  int max_iterations = 50;        // M
  std::optional<double> epsilon;  // absent: 1e-6 * (1 + max |initial beta_j|)
  double m = 1.5;                 // winsorization multiple of sigma

  void validate() const;
};

struct IterationRecord {
  int iteration;       // value of the loop counter c after the update
  double sigma;
  double k;
  double max_change;   // max |beta_o - beta| after the re-solve
};

struct RobustFitResult {
  Coefficients beta{Vector::Zero(1)};
  int iterations = 1;  // c
  double sigma = 0.0;
  double k = 0.0;
  Vector e_star;       // winsorized residuals at beta, |e_star| <= k
  Vector y_star;       // Xr beta + e_star
  bool converged = false;
  bool degenerate_scale = false;
  double epsilon = 0.0;  // resolved convergence bound
  std::vector<IterationRecord> trace;
};

/// Huber loss: e^2 inside [-k, k], 2k|e| - k^2 outside.
double huber_loss(double e, double k);

/// Lower weighted median: smallest sorted x whose cumulative weight reaches
/// half the total.
double weighted_median(const Vector& x, const Vector& w);

/// 1.483 * weighted_median(abs_errors, w).
double robust_scale(const Vector& abs_errors, const Vector& w);

/// Clips each residual to [-k, k].
Vector winsorize_residuals(const Vector& e, double k);

/// Winsorizes y - fitted at k. Unclipped entries of y_star are copied from y
/// so that a fit with nothing clipped reproduces y exactly.
void winsorize_outcome(const Vector& y, const Vector& fitted, double k,
                       Vector& e_star, Vector& y_star);

/// Iterative winsorization: start from the engineered least squares fit and
/// re-solve against winsorized outcomes until coefficients move by at most
/// epsilon or M is reached. H and the constraints are assembled once.
RobustFitResult fit_robust(const EngineeredProblem& prob, const RobustConfig& cfg);

/// Packages a plain least squares fit in the same shape (k = +inf, no
/// clipping), for callers that run with robustness disabled.
RobustFitResult fit_nonrobust(const EngineeredProblem& prob);

/// sum_i w_i rho(y_i - (Xr beta)_i; k).
double huber_objective(const Coefficients& beta, const EngineeredProblem& prob,
                       double k);

}  // namespace serls
