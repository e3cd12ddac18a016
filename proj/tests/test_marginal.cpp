#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include <serls/marginal.hpp>

#include "oracles.hpp"

using namespace serls;

namespace {

struct Fixture {
  Matrix x;  // columns: x1, x2
  Vector v;  // held-out driver
  Vector y;
};

Fixture make_fixture(int n, std::uint64_t seed, double v_effect, bool outliers) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> c(-1.0, 1.0), u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 0.5);
  Fixture f{Matrix(n, 2), Vector(n), Vector(n)};
  for (int i = 0; i < n; ++i) {
    f.x(i, 0) = c(rng);
    f.x(i, 1) = c(rng);
    f.v[i] = u(rng);
    f.y[i] = 2.0 + 1.5 * f.x(i, 0) - 1.0 * f.x(i, 1) + v_effect * (f.v[i] > 0.5 ? 1 : -1) + g(rng);
    if (outliers && i % 17 == 0) f.y[i] += 60.0;
  }
  return f;
}

const CharacteristicLayout kLayout({{"x1", {1}}, {"x2", {2}}});

}  // namespace

TEST_CASE("step1_objective") {
  const auto f = make_fixture(200, 1, 0.0, true);
  EngineeredProblem p(ObservationSet(f.y, f.x), ConstraintSet(2), PenaltySpec(0.0));
  const auto fit = fit_robust(p, RobustConfig{});
  const auto parts = step1_objective(fit, p.w());
  CHECK(parts.of == doctest::Approx(parts.sse_star / parts.rlsv_y).epsilon(1e-15));

  // Stored e* vs recomputed y* - Xr beta.
  const Vector recomputed = fit.y_star - p.xr() * fit.beta.beta();
  const double of2 = oracle::weighted_sum_squares(recomputed, p.w()) / parts.rlsv_y;
  CHECK(std::abs(of2 - parts.of) <= 1e-12);

  SUBCASE("perfect fit") {
    RobustFitResult perfect = fit;
    perfect.e_star.setZero();
    CHECK(step1_objective(perfect, p.w()).of == 0.0);
  }
  SUBCASE("intercept only gives OF = 1") {
    EngineeredProblem p0(ObservationSet(f.y, Matrix(200, 0)), ConstraintSet(0), PenaltySpec(0.0));
    const auto r0 = fit_robust(p0, RobustConfig{});
    CHECK(step1_objective(r0, p0.w()).of == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("constant winsorized outcome is degenerate") {
    RobustFitResult flat = fit;
    flat.y_star.setConstant(fit.beta.intercept());
    try {
      step1_objective(flat, p.w());
      FAIL("expected a degenerate variance error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kDegenerateVariance);
    }
  }
}

TEST_CASE("step1_marginal") {
  const auto f = make_fixture(300, 2, 0.0, true);
  EngineeredProblem p(ObservationSet(f.y, f.x), ConstraintSet(2), PenaltySpec(0.0));
  const auto fit = fit_robust(p, RobustConfig{});

  for (const char* name : {"x1", "x2"}) CHECK(step1_marginal(fit, p, kLayout, name) >= -1e-10);
  CHECK_THROWS_AS(step1_marginal(fit, p, kLayout, "nope"), Error);

  // Independent recomputation with explicit loops.
  const auto parts = step1_objective(fit, p.w());
  Vector zeroed = fit.beta.beta();
  zeroed[1] = 0.0;
  const Vector e1 = fit.y_star - oracle::matvec(p.xr(), zeroed);
  const double expected = oracle::weighted_sum_squares(e1, p.w()) / parts.rlsv_y - parts.of;
  CHECK(std::abs(step1_marginal(fit, p, kLayout, "x1") - expected) <= 1e-12);

  // Zero weights already: nothing changes.
  RobustFitResult pinned = fit;
  Vector b = fit.beta.beta();
  b[2] = 0.0;
  pinned.beta = Coefficients(b);
  pinned.e_star = pinned.y_star - p.xr() * b;
  CHECK(step1_marginal(pinned, p, kLayout, "x2") == 0.0);
}

TEST_CASE("step2_marginal") {
  const auto f = make_fixture(400, 3, 0.8, true);
  EngineeredProblem p(ObservationSet(f.y, f.x), ConstraintSet(2), PenaltySpec(0.0));
  const auto fit = fit_robust(p, RobustConfig{});

  SUBCASE("no new information") {
    Matrix same(400, 1);
    same.col(0) = p.xr() * fit.beta.beta();
    CHECK(std::abs(step2_marginal(fit, p, same, p.w())) <= 1e-10);
    CHECK(std::abs(step2_marginal(fit, p, Matrix(400, 0), p.w())) <= 1e-10);
  }
  SUBCASE("bins of the driving variable") {
    const Matrix bins = bspline_basis(f.v, SplineSpec{{0.5}, 0, 0.0, 1.0});
    const double mcii = step2_marginal(fit, p, bins, p.w());
    CHECK(mcii > 0.0);

    // KKT oracle on [1 | bin2 | s] (bin1 dropped: it equals 1 - bin2).
    Matrix aux(400, 3);
    aux.col(0).setOnes();
    aux.col(1) = bins.col(1);
    aux.col(2) = p.xr() * fit.beta.beta();
    const Matrix h = 2.0 * aux.transpose() * p.w().asDiagonal() * aux;
    const Vector g = -2.0 * aux.transpose() * p.w().cwiseProduct(fit.y_star);
    Matrix a = Matrix::Zero(1, 3);
    a(0, 2) = 1.0;
    const auto [coef, nu] = oracle::kkt_equality_solve(h, g, a, Vector::Ones(1));
    const auto parts = step1_objective(fit, p.w());
    const Vector e2 = fit.y_star - oracle::matvec(aux, coef);
    const double expected = parts.of - oracle::weighted_sum_squares(e2, p.w()) / parts.rlsv_y;
    CHECK(mcii == doctest::Approx(expected).epsilon(1e-8));
  }
  SUBCASE("row mismatch") {
    CHECK_THROWS_AS(step2_marginal(fit, p, Matrix::Ones(3, 1), p.w()), Error);
  }
}

TEST_CASE("nesting: MCII is never negative") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = make_fixture(120, 100 + trial, 0.3 * (trial % 3), trial % 2);
    EngineeredProblem p(ObservationSet(f.y, f.x), ConstraintSet(2), PenaltySpec(0.5 * trial));
    const auto fit = fit_robust(p, RobustConfig{});
    SplineSpec s{{0.3, 0.6}, trial % 4, 0.0, 1.0};
    Vector noise(120);
    for (auto& v : noise) v = u(rng);
    CHECK(step2_marginal(fit, p, bspline_basis(noise, s), p.w()) >= -1e-10);
  }
}

TEST_CASE("evaluate_on_sample") {
  const auto f = make_fixture(250, 4, 0.5, true);
  EngineeredProblem p(ObservationSet(f.y, f.x), ConstraintSet(2), PenaltySpec(0.0));
  const auto fit = fit_robust(p, RobustConfig{});
  const std::vector<Step2Candidate> cands{{"v", f.v, SplineSpec{{0.5}, 0, 0.0, 1.0}}};

  const auto dev = evaluate_sample(development_sample(fit, p), kLayout, cands,
                                   SampleLabel::kDevelopment);
  const auto val = evaluate_on_sample(fit, p.obs(), p.design(), kLayout, cands);
  CHECK(val.sample_label == SampleLabel::kValidation);
  CHECK(std::abs(val.of - dev.of) <= 1e-12);
  CHECK(std::abs(val.sse_star - dev.sse_star) <= 1e-12);
  for (std::size_t i = 0; i < dev.step1.size(); ++i)
    CHECK(std::abs(val.step1[i].second - dev.step1[i].second) <= 1e-12);
  CHECK(std::abs(val.step2[0].second - dev.step2[0].second) <= 1e-12);

  SUBCASE("a shifted validation point contributes at most k^2 w") {
    Vector y = f.y;
    y[10] += 1000.0;
    ObservationSet shifted(y, f.x);
    const auto s = validation_sample(fit, shifted, assemble_design(shifted));
    CHECK(std::abs(s.e_star[10]) <= fit.k);
    CHECK(s.w[10] * s.e_star[10] * s.e_star[10] <= fit.k * fit.k * s.w[10] + 1e-15);
  }
  SUBCASE("validation dimensions are checked") {
    ObservationSet narrow(f.y, f.x.leftCols(1));
    CHECK_THROWS_AS(evaluate_on_sample(fit, narrow, assemble_design(narrow), kLayout, {}), Error);
  }
}

TEST_CASE("OF is invariant to rescaling the outcome") {
  const auto f = make_fixture(150, 6, 0.4, true);
  EngineeredProblem p(ObservationSet(f.y, f.x), ConstraintSet(2), PenaltySpec(0.0));
  RobustConfig cfg;
  cfg.epsilon = 1e-10;
  cfg.max_iterations = 500;
  const auto fit = fit_robust(p, cfg);
  const double c = 37.0;
  EngineeredProblem scaled(ObservationSet(c * f.y, f.x), ConstraintSet(2), PenaltySpec(0.0));
  RobustConfig scfg = cfg;
  scfg.epsilon = c * *cfg.epsilon;
  const auto sfit = fit_robust(scaled, scfg);
  CHECK(step1_objective(sfit, scaled.w()).of ==
        doctest::Approx(step1_objective(fit, p.w()).of).epsilon(1e-8));
}

TEST_CASE("random split generalization gap") {
  // One synthetic data set with many weak columns, split in half 20 times.
  const int n = 120, p = 20;
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g;
  Matrix x(n, p);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) x(i, j) = g(rng);
    y[i] = 1.0 + x(i, 0) - 0.5 * x(i, 1) + g(rng);
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  int failures = 0;
  for (int split = 0; split < 20; ++split) {
    std::shuffle(order.begin(), order.end(), rng);
    auto take = [&](int from) {
      Matrix xs(n / 2, p);
      Vector ys(n / 2);
      for (int r = 0; r < n / 2; ++r) {
        xs.row(r) = x.row(order[from + r]);
        ys[r] = y[order[from + r]];
      }
      return ObservationSet(ys, xs);
    };
    const ObservationSet dobs = take(0);
    const ObservationSet vobs = take(n / 2);
    EngineeredProblem pr(dobs, ConstraintSet(p), PenaltySpec(0.0));
    const auto fit = fit_robust(pr, RobustConfig{});
    const auto dev = step1_objective(development_sample(fit, pr));
    const auto val = step1_objective(validation_sample(fit, vobs, assemble_design(vobs)));
    if (val.of < dev.of) ++failures;
  }
  CHECK(failures <= 5);
}
