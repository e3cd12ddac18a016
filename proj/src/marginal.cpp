#include "serls/marginal.hpp"

#include <sstream>

#include "serls/qp_solver.hpp"

namespace serls {
namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorKind::kInvalidInput, msg);
}

void check_sample(const WinsorizedSample& s) {
  const auto n = s.design.rows();
  require(s.w.size() == n && s.e_star.size() == n && s.y_star.size() == n,
          "winsorized sample vectors differ in length from the design");
  require(s.beta.size() == s.design.cols(),
          "coefficient length differs from design columns");
}

}  // namespace

const char* to_string(SampleLabel label) {
  return label == SampleLabel::kDevelopment ? "development" : "validation";
}

WinsorizedSample development_sample(const RobustFitResult& fit,
                                    const EngineeredProblem& prob) {
  WinsorizedSample s{prob.design(), prob.w(), fit.beta, fit.k, fit.e_star, fit.y_star};
  check_sample(s);
  return s;
}

WinsorizedSample validation_sample(const RobustFitResult& fit,
                                   const ObservationSet& val_obs,
                                   const DesignMatrix& val_design) {
  require(val_design.rows() == val_obs.n(),
          "validation design row count differs from observations");
  require(val_design.cols() == fit.beta.size(),
          "validation design column count differs from the model");
  WinsorizedSample s{val_design, val_obs.w(), fit.beta, fit.k, Vector(), Vector()};
  const Vector fitted = score(val_design, fit.beta);
  winsorize_outcome(val_obs.y(), fitted, fit.k, s.e_star, s.y_star);
  return s;
}

ObjectiveParts step1_objective(const WinsorizedSample& s) {
  check_sample(s);
  ObjectiveParts parts{};
  parts.sse_star = weighted_sse(s.e_star, s.w);
  const Vector centered = s.y_star.array() - s.beta.intercept();
  parts.rlsv_y = weighted_sse(centered, s.w);
  if (!(parts.rlsv_y > 1e-14 * s.w.dot(s.y_star.cwiseAbs2()))) {
    std::ostringstream os;
    os << "winsorized outcome variance is degenerate (RLSV_y = " << parts.rlsv_y << ")";
    throw Error(ErrorKind::kDegenerateVariance, os.str());
  }
  parts.of = parts.sse_star / parts.rlsv_y;
  return parts;
}

ObjectiveParts step1_objective(const RobustFitResult& fit, const Vector& w) {
  require(w.size() == fit.e_star.size(), "weight length differs from the fit");
  const auto n = w.size();
  // Only the intercept, e* and y* enter; the design is not consulted.
  Matrix ones = Matrix::Ones(n, 1);
  WinsorizedSample s{DesignMatrix(ones), w, Coefficients(fit.beta.beta().head(1)),
                     fit.k, fit.e_star, fit.y_star};
  return step1_objective(s);
}

double step1_marginal(const WinsorizedSample& s, const CharacteristicLayout& layout,
                      const std::string& name) {
  const ObjectiveParts parts = step1_objective(s);
  const Characteristic& group = layout.find(name);
  layout.check_against(s.design.cols());
  Vector beta_zeroed = s.beta.beta();
  for (auto c : group.columns) beta_zeroed[c] = 0.0;
  const Vector e_zeroed = s.y_star - s.design.xr() * beta_zeroed;
  return weighted_sse(e_zeroed, s.w) / parts.rlsv_y - parts.of;
}

double step1_marginal(const RobustFitResult& fit, const EngineeredProblem& prob,
                      const CharacteristicLayout& layout, const std::string& name) {
  return step1_marginal(development_sample(fit, prob), layout, name);
}

Vector step2_fitted(const WinsorizedSample& s, const Matrix& basis_cols) {
  check_sample(s);
  const auto n = s.design.rows();
  require(basis_cols.rows() == n, "Step II basis row count differs from the sample");
  require(basis_cols.allFinite(), "Step II basis contains non-finite values");
  const auto q = basis_cols.cols();
  const auto cols = q + 2;

  Matrix aux(n, cols);
  aux.col(0).setOnes();
  aux.middleCols(1, q) = basis_cols;
  aux.col(cols - 1) = score(s.design, s.beta);

  QuadraticProgram qp;
  Matrix gram = aux.transpose() * s.w.asDiagonal() * aux;
  qp.h = gram + gram.transpose();
  qp.f = -2.0 * (aux.transpose() * s.w.cwiseProduct(s.y_star));
  qp.a_eq = Matrix::Zero(1, cols);
  qp.a_eq(0, cols - 1) = 1.0;
  qp.b_eq = Vector::Ones(1);
  qp.a_ineq = Matrix(0, cols);
  qp.b_ineq = Vector(0);
  const QpSolution sol = solve_qp(qp);
  require_solved(sol, "Step II auxiliary fit");
  return aux * sol.beta;
}

double step2_marginal(const WinsorizedSample& s, const Matrix& basis_cols) {
  const ObjectiveParts parts = step1_objective(s);
  const Vector e2 = s.y_star - step2_fitted(s, basis_cols);
  return parts.of - weighted_sse(e2, s.w) / parts.rlsv_y;
}

double step2_marginal(const RobustFitResult& fit, const EngineeredProblem& prob,
                      const Matrix& basis_cols, const Vector& w) {
  WinsorizedSample s = development_sample(fit, prob);
  require(w.size() == s.w.size(), "weight length differs from the sample");
  s.w = w;
  return step2_marginal(s, basis_cols);
}

MarginalReport evaluate_sample(const WinsorizedSample& s,
                               const CharacteristicLayout& layout,
                               const std::vector<Step2Candidate>& step2,
                               SampleLabel label) {
  const ObjectiveParts parts = step1_objective(s);
  MarginalReport report;
  report.of = parts.of;
  report.rlsv_y = parts.rlsv_y;
  report.sse_star = parts.sse_star;
  report.sample_label = label;
  for (const auto& g : layout.groups())
    report.step1.emplace_back(g.name, step1_marginal(s, layout, g.name));
  for (const auto& cand : step2) {
    require(cand.values.size() == s.design.rows(),
            "Step II candidate '" + cand.name + "' has the wrong number of values");
    report.step2.emplace_back(cand.name,
                              step2_marginal(s, bspline_basis(cand.values, cand.spec)));
  }
  return report;
}

MarginalReport evaluate_on_sample(const RobustFitResult& fit,
                                  const ObservationSet& val_obs,
                                  const DesignMatrix& val_design,
                                  const CharacteristicLayout& layout,
                                  const std::vector<Step2Candidate>& step2) {
  return evaluate_sample(validation_sample(fit, val_obs, val_design), layout, step2,
                         SampleLabel::kValidation);
}

}  // namespace serls
