#include "serls/engineered_ls.hpp"

#include <sstream>

namespace serls {
namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorKind::kInvalidInput, msg);
}

}  // namespace

EngineeredProblem::EngineeredProblem(ObservationSet obs, ConstraintSet constraints,
                                     PenaltySpec penalty)
    : EngineeredProblem(obs, assemble_design(obs), std::move(constraints), penalty) {}

EngineeredProblem::EngineeredProblem(ObservationSet obs, DesignMatrix design,
                                     ConstraintSet constraints, PenaltySpec penalty)
    : obs_(std::move(obs)), design_(std::move(design)),
      constraints_(std::move(constraints)), penalty_(penalty) {
  require(design_.rows() == obs_.n(), "design row count differs from observations");
  require(design_.cols() == obs_.p() + 1, "design column count differs from p + 1");
  require(design_.xr().rightCols(obs_.p()) == obs_.x_raw(),
          "design columns 1..p differ from x_raw");
  if (constraints_.empty() && constraints_.cols() != design_.cols())
    constraints_ = ConstraintSet(obs_.p());
  require(constraints_.cols() == design_.cols(),
          "constraint column count differs from p + 1");
}

Vector engineered_linear_term(const EngineeredProblem& prob, const Vector& y_target) {
  require(y_target.size() == prob.n(), "target length differs from n");
  require(y_target.allFinite(), "target contains non-finite values");
  return -2.0 * (prob.xr().transpose() * prob.w().cwiseProduct(y_target));
}

QuadraticProgram build_engineered_qp(const EngineeredProblem& prob,
                                     const Vector& y_target) {
  const Matrix& xr = prob.xr();
  const auto cols = prob.cols();
  Matrix gram = xr.transpose() * prob.w().asDiagonal() * xr;
  gram = 0.5 * (gram + gram.transpose());
  const double ridge = prob.penalty().lambda / static_cast<double>(prob.n());
  for (Eigen::Index j = 1; j < cols; ++j) gram(j, j) += ridge;

  const auto& cs = prob.constraints();
  QuadraticProgram qp;
  qp.h = 2.0 * gram;
  qp.f = engineered_linear_term(prob, y_target);
  qp.a_eq.resize(cs.air().rows() + cs.acr().rows(), cols);
  qp.a_eq << cs.air(), cs.acr();
  qp.b_eq = Vector::Zero(qp.a_eq.rows());
  qp.b_eq.head(cs.iw().size()) = cs.iw();
  qp.a_ineq = cs.apr();
  qp.b_ineq = Vector::Zero(cs.apr().rows());
  return qp;
}

void require_solved(const QpSolution& sol, const std::string& what) {
  switch (sol.status) {
    case QpStatus::kOptimal:
    case QpStatus::kDegenerate:
      return;
    case QpStatus::kInfeasible: {
      std::ostringstream os;
      os << what << ": constraints are infeasible";
      if (sol.infeasible_row)
        os << " (" << (sol.infeasible_in_eq ? "equality" : "inequality") << " row "
           << *sol.infeasible_row << ")";
      throw Error(ErrorKind::kInfeasible, os.str());
    }
    case QpStatus::kMaxIterations:
      throw Error(ErrorKind::kSolverFailure,
                  what + ": quadratic program hit the iteration limit");
  }
}

EngineeredSolver::EngineeredSolver(const EngineeredProblem& prob, QpOptions opts)
    : prob_(prob), qp_(build_engineered_qp(prob, prob.obs().y())), opts_(opts) {}

QpSolution EngineeredSolver::solve(const Vector& y_target) {
  qp_.f = engineered_linear_term(prob_, y_target);
  QpSolution sol = solve_qp(qp_, opts_);
  require_solved(sol, "engineered least squares");
  return sol;
}

Coefficients fit_engineered_ls(const EngineeredProblem& prob, const Vector& y_target) {
  EngineeredSolver solver(prob);
  return Coefficients(solver.solve(y_target).beta);
}

Vector score(const DesignMatrix& design, const Coefficients& beta) {
  require(design.cols() == beta.size(), "coefficient length differs from design columns");
  return design.xr() * beta.beta();
}

double weighted_sse(const Vector& errors, const Vector& w) {
  require(errors.size() == w.size(), "error and weight lengths differ");
  return w.dot(errors.cwiseAbs2());
}

double engineered_objective(const EngineeredProblem& prob, const Vector& y_target,
                            const Coefficients& beta) {
  const Vector e = y_target - score(prob.design(), beta);
  const double ridge = prob.penalty().lambda / static_cast<double>(prob.n());
  return weighted_sse(e, prob.w()) + ridge * beta.weights().squaredNorm();
}

}  // namespace serls
