#include "serls/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kkt_factor.hpp"

namespace serls {
namespace {

using Index = Eigen::Index;

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorKind::kInvalidInput, "quadratic program: " + msg);
}

double max_violation(const Matrix& a, const Vector& b, const Vector& x,
                     Index* worst = nullptr) {
  double v = 0.0;
  for (Index j = 0; j < a.rows(); ++j) {
    const double r = a.row(j).dot(x) - b[j];
    if (r > v) {
      v = r;
      if (worst) *worst = j;
    }
  }
  return v;
}

struct ActiveSetResult {
  Vector x;
  Vector eq_mult;
  Vector ineq_mult;
  QpStatus status = QpStatus::kOptimal;
  int iterations = 0;
};

// Primal active-set iteration from a point x that satisfies a x <= b (up to
// rounding). ceq must have full row rank and h must be positive definite on
// its null space.
ActiveSetResult active_set(const Matrix& h, const Vector& f, const Matrix& ceq,
                           const Vector& deq, const Matrix& a, const Vector& b,
                           Vector x, int max_iter) {
  const Index n = h.rows();
  const Index me = ceq.rows();
  const Index m = a.rows();

  std::vector<Index> working;  // sorted ascending
  std::vector<char> in_working(static_cast<std::size_t>(m), 0);
  detail::SymmetricIndefiniteFactor factor;
  Vector lambda = Vector::Zero(me);
  std::vector<Index> solved_working;  // working set behind `lambda`

  ActiveSetResult out;
  out.status = QpStatus::kMaxIterations;

  for (int iter = 0; iter < max_iter; ++iter) {
    out.iterations = iter + 1;
    const Index k = me + static_cast<Index>(working.size());
    Matrix kkt = Matrix::Zero(n + k, n + k);
    kkt.topLeftCorner(n, n) = h;
    Vector rhs(n + k);
    rhs.head(n) = -f;
    for (Index i = 0; i < me; ++i) {
      kkt.block(n + i, 0, 1, n) = ceq.row(i);
      rhs[n + i] = deq[i];
    }
    for (std::size_t w = 0; w < working.size(); ++w) {
      const Index row = me + static_cast<Index>(w);
      kkt.block(n + row, 0, 1, n) = a.row(working[w]);
      rhs[n + row] = b[working[w]];
    }
    kkt.topRightCorner(n, k) = kkt.bottomLeftCorner(k, n).transpose();
    if (!factor.compute(kkt))
      throw Error(ErrorKind::kSolverFailure,
                  "quadratic program: singular KKT system in active-set step");
    const Vector sol = factor.solve(rhs);
    const Vector xhat = sol.head(n);
    lambda = sol.tail(k);
    solved_working = working;
    const Vector step = xhat - x;

    const bool zero_step =
        step.lpNorm<Eigen::Infinity>() <= 1e-13 * (1.0 + x.lpNorm<Eigen::Infinity>());
    if (!zero_step) {
      double alpha = 1.0;
      Index blocking = -1;
      const double step_norm = step.lpNorm<Eigen::Infinity>();
      for (Index j = 0; j < m; ++j) {
        if (in_working[static_cast<std::size_t>(j)]) continue;
        const double ap = a.row(j).dot(step);
        if (ap <= 1e-15 * a.row(j).lpNorm<1>() * step_norm) continue;
        const double slack = std::max(0.0, b[j] - a.row(j).dot(x));
        const double ratio = slack / ap;
        if (ratio < alpha) {
          alpha = ratio;
          blocking = j;
        }
      }
      if (blocking >= 0) {
        x += alpha * step;
        working.insert(std::upper_bound(working.begin(), working.end(), blocking),
                       blocking);
        in_working[static_cast<std::size_t>(blocking)] = 1;
        continue;
      }
    }
    x = xhat;

    // At the minimizer over the current working set: check multiplier signs.
    const double scale = 1.0 + (lambda.size() ? lambda.lpNorm<Eigen::Infinity>() : 0.0);
    std::size_t drop = working.size();
    double most_negative = -1e-12 * scale;
    for (std::size_t w = 0; w < working.size(); ++w) {
      const double mu = lambda[me + static_cast<Index>(w)];
      if (mu < most_negative) {
        most_negative = mu;
        drop = w;
      }
    }
    if (drop == working.size()) {
      out.status = QpStatus::kOptimal;
      break;
    }
    in_working[static_cast<std::size_t>(working[drop])] = 0;
    working.erase(working.begin() + static_cast<std::ptrdiff_t>(drop));
  }

  out.x = x;
  out.eq_mult = lambda.head(me);
  out.ineq_mult = Vector::Zero(m);
  for (std::size_t w = 0; w < solved_working.size(); ++w)
    out.ineq_mult[solved_working[w]] = lambda[me + static_cast<Index>(w)];
  return out;
}

struct FoldedRows {
  Matrix a;
  Vector b;
  Index user_rows = 0;
  std::vector<Index> lower_var;  // variable index of each folded lower row
  std::vector<Index> upper_var;
};

FoldedRows fold_bounds(const QuadraticProgram& qp) {
  const Index n = qp.dim();
  std::vector<Index> lower, upper;
  if (qp.lower)
    for (Index i = 0; i < n; ++i)
      if (std::isfinite((*qp.lower)[i])) lower.push_back(i);
  if (qp.upper)
    for (Index i = 0; i < n; ++i)
      if (std::isfinite((*qp.upper)[i])) upper.push_back(i);
  FoldedRows out;
  out.user_rows = qp.a_ineq.rows();
  const Index total = out.user_rows + static_cast<Index>(lower.size() + upper.size());
  out.a = Matrix::Zero(total, n);
  out.b = Vector::Zero(total);
  out.a.topRows(out.user_rows) = qp.a_ineq;
  out.b.head(out.user_rows) = qp.b_ineq;
  Index row = out.user_rows;
  for (Index i : lower) {
    out.a(row, i) = -1.0;
    out.b[row++] = -(*qp.lower)[i];
  }
  for (Index i : upper) {
    out.a(row, i) = 1.0;
    out.b[row++] = (*qp.upper)[i];
  }
  out.lower_var = std::move(lower);
  out.upper_var = std::move(upper);
  return out;
}

// Finds a point satisfying ceq x = deq and a x <= b by minimizing the maximum
// violation t through a sequence of proximal strictly convex programs in (x, t).
// Returns false when the minimal violation stays above tol.
bool phase_one(const Matrix& ceq, const Vector& deq, const Matrix& a,
               const Vector& b, double tol, int max_iter, Vector& x) {
  const Index n = x.size();
  const Index m = a.rows();
  Matrix c1 = Matrix::Zero(ceq.rows(), n + 1);
  c1.leftCols(n) = ceq;
  Matrix a1 = Matrix::Zero(m + 1, n + 1);
  a1.topLeftCorner(m, n) = a;
  a1.col(n).setConstant(-1.0);
  Vector b1(m + 1);
  b1.head(m) = b;
  b1[m] = 0.0;

  double previous = max_violation(a, b, x);
  for (int round = 0; round < 200; ++round) {
    const double t0 = std::max(0.0, max_violation(a, b, x));
    if (t0 <= 1e-3 * tol) return true;
    const double rho = 1e-2 / (1.0 + t0);
    const Matrix h1 = rho * Matrix::Identity(n + 1, n + 1);
    Vector f1(n + 1);
    f1.head(n) = -rho * x;
    f1[n] = 1.0;
    Vector z0(n + 1);
    z0.head(n) = x;
    z0[n] = t0;
    const auto r = active_set(h1, f1, c1, deq, a1, b1, z0, max_iter);
    x = r.x.head(n);
    const double now = std::max(0.0, max_violation(a, b, x));
    if (now <= 1e-3 * tol) return true;
    if (round > 0 && previous - now <= 1e-12 * (1.0 + now)) break;
    previous = now;
  }
  return max_violation(a, b, x) <= tol;
}

}  // namespace

const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::kOptimal: return "optimal";
    case QpStatus::kInfeasible: return "infeasible";
    case QpStatus::kMaxIterations: return "max_iterations";
    case QpStatus::kDegenerate: return "degenerate";
  }
  return "unknown";
}

QuadraticProgram QuadraticProgram::unconstrained(Matrix h, Vector f) {
  const Index n = h.rows();
  return QuadraticProgram{std::move(h), std::move(f), Matrix(0, n), Vector(0),
                          Matrix(0, n), Vector(0), std::nullopt, std::nullopt};
}

void QuadraticProgram::validate() const {
  const Index n = h.rows();
  require(n >= 1 && h.cols() == n, "H must be square and nonempty");
  require(f.size() == n, "f length differs from H");
  require(a_ineq.cols() == n && a_ineq.rows() == b_ineq.size(),
          "inequality block dimensions are inconsistent");
  require(a_eq.cols() == n && a_eq.rows() == b_eq.size(),
          "equality block dimensions are inconsistent");
  require(!lower || lower->size() == n, "lower bound length differs from H");
  require(!upper || upper->size() == n, "upper bound length differs from H");
  require(h.allFinite() && f.allFinite() && a_ineq.allFinite() &&
              b_ineq.allFinite() && a_eq.allFinite() && b_eq.allFinite(),
          "non-finite entries");
  if (lower) require(!(lower->array() == kInf).any(), "lower bound of +inf");
  if (upper) require(!(upper->array() == -kInf).any(), "upper bound of -inf");
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  require((h - h.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale,
          "H is not symmetric");
}

QpSolution solve_qp(const QuadraticProgram& qp, const QpOptions& opts) {
  qp.validate();
  require(opts.tol > 0.0, "tolerance must be positive");
  const Index n = qp.dim();
  const FoldedRows folded = fold_bounds(qp);
  const int max_iter =
      opts.max_iter > 0 ? opts.max_iter
                        : static_cast<int>(50 * (n + folded.a.rows()));

  QpSolution sol;
  sol.eq_multipliers = Vector::Zero(qp.a_eq.rows());
  sol.ineq_multipliers = Vector::Zero(qp.a_ineq.rows());
  if (qp.lower) sol.lower_multipliers = Vector::Zero(n);
  if (qp.upper) sol.upper_multipliers = Vector::Zero(n);

  // Keep a maximal independent subset of equality rows.
  std::vector<Index> kept;
  if (qp.a_eq.rows() > 0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(qp.a_eq.transpose());
    qr.setThreshold(1e-12);
    const Index rank = qr.rank();
    for (Index i = 0; i < rank; ++i) kept.push_back(qr.colsPermutation().indices()[i]);
    std::sort(kept.begin(), kept.end());
  }
  const Index r = static_cast<Index>(kept.size());
  Matrix ceq(r, n);
  Vector deq(r);
  for (Index i = 0; i < r; ++i) {
    ceq.row(i) = qp.a_eq.row(kept[static_cast<std::size_t>(i)]);
    deq[i] = qp.b_eq[kept[static_cast<std::size_t>(i)]];
  }

  // Least-norm point on the equality manifold.
  Vector x = Vector::Zero(n);
  if (r > 0) x = Eigen::CompleteOrthogonalDecomposition<Matrix>(ceq).solve(deq);
  if (qp.a_eq.rows() > 0) {
    const Vector eq_res = qp.a_eq * x - qp.b_eq;
    Index worst = 0;
    const double v = eq_res.cwiseAbs().maxCoeff(&worst);
    if (v > opts.tol * (1.0 + qp.b_eq.cwiseAbs().maxCoeff())) {
      sol.beta = x;
      sol.status = QpStatus::kInfeasible;
      sol.infeasible_row = worst;
      sol.infeasible_in_eq = true;
      sol.kkt_residual = kkt_residual(qp, sol);
      return sol;
    }
  }

  // Positive definiteness of H on the equality null space.
  Matrix h = 0.5 * (qp.h + qp.h.transpose());
  bool degenerate = false;
  if (r < n) {
    Matrix z;
    if (r == 0) {
      z = Matrix::Identity(n, n);
    } else {
      Eigen::HouseholderQR<Matrix> qr(ceq.transpose());
      const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
      z = q.rightCols(n - r);
    }
    const Matrix reduced = z.transpose() * h * z;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(reduced, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double scale =
        std::max({eig.eigenvalues().cwiseAbs().maxCoeff(),
                  h.diagonal().cwiseAbs().maxCoeff(),
                  std::numeric_limits<double>::min()});
    if (lo < -1e-8 * scale)
      throw Error(ErrorKind::kInvalidInput,
                  "quadratic program: H is indefinite on the equality null space");
    if (lo <= 1e-10 * scale) {
      double shift = 1e-10 * h.trace() / static_cast<double>(n);
      if (!(shift > 0.0)) shift = 1e-10;
      h.diagonal().array() += shift;
      degenerate = true;
    }
  }

  if (max_violation(folded.a, folded.b, x) > 0.0 &&
      !phase_one(ceq, deq, folded.a, folded.b, opts.tol, max_iter, x)) {
    Index worst = 0;
    max_violation(folded.a, folded.b, x, &worst);
    sol.beta = x;
    sol.status = QpStatus::kInfeasible;
    sol.infeasible_row = worst;
    sol.kkt_residual = kkt_residual(qp, sol);
    return sol;
  }

  const auto result = active_set(h, qp.f, ceq, deq, folded.a, folded.b, x, max_iter);
  sol.beta = result.x;
  sol.iterations = result.iterations;
  for (Index i = 0; i < r; ++i)
    sol.eq_multipliers[kept[static_cast<std::size_t>(i)]] = result.eq_mult[i];
  // Multipliers in (-1e-12 * scale, 0) are rounding noise of inactive rows.
  const Vector mu = result.ineq_mult.cwiseMax(0.0);
  sol.ineq_multipliers = mu.head(folded.user_rows);
  Index row = folded.user_rows;
  for (Index i : folded.lower_var) sol.lower_multipliers[i] = mu[row++];
  for (Index i : folded.upper_var) sol.upper_multipliers[i] = mu[row++];

  sol.kkt_residual = kkt_residual(qp, sol);
  if (result.status == QpStatus::kMaxIterations) {
    sol.status = QpStatus::kMaxIterations;
  } else if (degenerate || sol.kkt_residual > opts.tol) {
    sol.status = QpStatus::kDegenerate;
  } else {
    sol.status = QpStatus::kOptimal;
  }
  return sol;
}

double kkt_residual(const QuadraticProgram& qp, const QpSolution& sol) {
  qp.validate();
  const Index n = qp.dim();
  auto check = [](bool ok) {
    if (!ok) throw Error(ErrorKind::kInvalidInput, "kkt_residual: dimension mismatch");
  };
  check(sol.beta.size() == n);
  check(sol.eq_multipliers.size() == qp.a_eq.rows());
  check(sol.ineq_multipliers.size() == qp.a_ineq.rows());
  if (qp.lower) check(sol.lower_multipliers.size() == n);
  if (qp.upper) check(sol.upper_multipliers.size() == n);

  const Vector& x = sol.beta;
  Vector grad = qp.h * x + qp.f + qp.a_eq.transpose() * sol.eq_multipliers +
                qp.a_ineq.transpose() * sol.ineq_multipliers;
  double worst = 0.0;
  if (qp.a_eq.rows() > 0)
    worst = std::max(worst, (qp.a_eq * x - qp.b_eq).lpNorm<Eigen::Infinity>());

  auto ineq_terms = [&worst](double slack_violation, double mu) {
    // slack_violation = a x - b
    worst = std::max(worst, slack_violation);
    worst = std::max(worst, -mu);
    worst = std::max(worst, std::abs(mu * slack_violation));
  };
  for (Index j = 0; j < qp.a_ineq.rows(); ++j)
    ineq_terms(qp.a_ineq.row(j).dot(x) - qp.b_ineq[j], sol.ineq_multipliers[j]);
  for (Index i = 0; i < n; ++i) {
    if (qp.lower && std::isfinite((*qp.lower)[i])) {
      grad[i] -= sol.lower_multipliers[i];
      ineq_terms((*qp.lower)[i] - x[i], sol.lower_multipliers[i]);
    }
    if (qp.upper && std::isfinite((*qp.upper)[i])) {
      grad[i] += sol.upper_multipliers[i];
      ineq_terms(x[i] - (*qp.upper)[i], sol.upper_multipliers[i]);
    }
  }
  return std::max(worst, grad.lpNorm<Eigen::Infinity>());
}

}  // namespace serls
