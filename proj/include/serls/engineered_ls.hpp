#pragma once

#include "serls/model_core.hpp"
#include "serls/qp_solver.hpp"

namespace serls {

/// Observations, design, score-engineering constraints and ridge penalty of
/// one weighted least squares problem.
class EngineeredProblem {
 public:
  EngineeredProblem(ObservationSet obs, ConstraintSet constraints,
                    PenaltySpec penalty);
  /// Same, with an explicit design (must match obs row count and
  /// obs.x_raw in columns 1..p).
  EngineeredProblem(ObservationSet obs, DesignMatrix design,
                    ConstraintSet constraints, PenaltySpec penalty);

  const ObservationSet& obs() const { return obs_; }
  const DesignMatrix& design() const { return design_; }
  const ConstraintSet& constraints() const { return constraints_; }
  const PenaltySpec& penalty() const { return penalty_; }
  const Matrix& xr() const { return design_.xr(); }
  const Vector& w() const { return obs_.w(); }
  Eigen::Index n() const { return obs_.n(); }
  Eigen::Index cols() const { return design_.cols(); }

 private:
  ObservationSet obs_;
  DesignMatrix design_;
  ConstraintSet constraints_;
  PenaltySpec penalty_;
};

/// H = 2(Xr'WXr + (lambda/n) Ir), f = -2 Xr'W y_target, Aeq = [Air; Acr],
/// beq = [iw; 0], A = Apr, b = 0, no bounds. Ir is the identity with its
/// intercept entry zeroed.
QuadraticProgram build_engineered_qp(const EngineeredProblem& prob,
                                     const Vector& y_target);

/// f = -2 Xr'(w .* y_target); the only part of the program that depends on
/// the target.
Vector engineered_linear_term(const EngineeredProblem& prob, const Vector& y_target);

/// Holds the assembled program so repeated fits against different targets
/// only recompute f.
class EngineeredSolver {
 public:
  explicit EngineeredSolver(const EngineeredProblem& prob, QpOptions opts = {});

  /// Throws kInfeasible or kSolverFailure when the program is not solved.
  /// Degenerate (shifted) solves are accepted.
  QpSolution solve(const Vector& y_target);
  const QuadraticProgram& program() const { return qp_; }
  const Vector& last_f() const { return qp_.f; }

 private:
  const EngineeredProblem& prob_;
  QuadraticProgram qp_;
  QpOptions opts_;
};

Coefficients fit_engineered_ls(const EngineeredProblem& prob, const Vector& y_target);

/// Xr * beta.
Vector score(const DesignMatrix& design, const Coefficients& beta);

/// sum_i w_i e_i^2.
double weighted_sse(const Vector& errors, const Vector& w);

/// Weighted SSE plus (lambda/n) S'S, i.e. the program objective with the
/// constant y'Wy added back.
double engineered_objective(const EngineeredProblem& prob, const Vector& y_target,
                            const Coefficients& beta);

/// Throws unless status is optimal or degenerate; the message names `what`.
void require_solved(const QpSolution& sol, const std::string& what);

}  // namespace serls
