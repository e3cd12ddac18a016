#pragma once

#include <optional>

#include "serls/model_core.hpp"

namespace serls {

/// minimize 1/2 x'Hx + f'x  subject to  a_eq x = b_eq,  a_ineq x <= b_ineq,
/// lower <= x <= upper.
struct QuadraticProgram {
  Matrix h;
  Vector f;
  Matrix a_ineq;
  Vector b_ineq;
  Matrix a_eq;
  Vector b_eq;
  std::optional<Vector> lower;  // absent = unbounded; entries may be -inf
  std::optional<Vector> upper;  // absent = unbounded; entries may be +inf

  /// Unconstrained program with the given size.
  static QuadraticProgram unconstrained(Matrix h, Vector f);

  Eigen::Index dim() const { return h.rows(); }
  /// Checks sizes, finiteness and symmetry of h (1e-10 relative).
  void validate() const;
  double objective(const Vector& x) const { return 0.5 * x.dot(h * x) + f.dot(x); }
};

enum class QpStatus { kOptimal, kInfeasible, kMaxIterations, kDegenerate };

const char* to_string(QpStatus status);

struct QpSolution {
  Vector beta;
  QpStatus status = QpStatus::kOptimal;
  Vector eq_multipliers;    // one per a_eq row
  Vector ineq_multipliers;  // one per a_ineq row, >= 0
  Vector lower_multipliers; // one per variable when lower bounds exist
  Vector upper_multipliers;
  double kkt_residual = 0.0;
  int iterations = 0;
  /// For kInfeasible: the most violated row of a_ineq (or of a_eq when the
  /// equalities themselves are inconsistent, flagged by infeasible_in_eq).
  std::optional<Eigen::Index> infeasible_row;
  bool infeasible_in_eq = false;
};

struct QpOptions {
  double tol = 1e-9;
  /// 0 selects the default 50*(n + rows of a_ineq).
  int max_iter = 0;
};

/// Primal active-set solver. Each working-set subproblem is an
/// equality-constrained QP solved through a symmetric indefinite
/// factorization of its KKT matrix.
///
/// If H is not positive definite on the null space of a_eq, a diagonal shift
/// of 1e-10*trace(H)/n is added and the result carries kDegenerate.
/// Throws kInvalidInput for malformed programs; infeasibility and iteration
/// exhaustion are reported through the status.
QpSolution solve_qp(const QuadraticProgram& qp, const QpOptions& opts = {});

/// Largest violation among stationarity, primal feasibility, dual sign and
/// complementary slackness for `sol` as a solution of `qp`.
double kkt_residual(const QuadraticProgram& qp, const QpSolution& sol);

}  // namespace serls
