#include <doctest.h>

#include <random>

#include <serls/model_core.hpp>

using namespace serls;

TEST_CASE("normalize_weights") {
  CHECK(normalize_weights(Vector::Ones(4)).isApprox(Vector::Constant(4, 0.25)));
  Vector already(3);
  already << 0.2, 0.3, 0.5;
  CHECK(normalize_weights(already) == already);
  Vector w(3);
  w << 2, 0, 6;
  Vector expected(3);
  expected << 0.25, 0.0, 0.75;
  CHECK(normalize_weights(w).isApprox(expected, 1e-15));

  CHECK_THROWS_AS(normalize_weights(Vector::Zero(3)), Error);
  Vector negative(2);
  negative << 1.0, -0.5;
  CHECK_THROWS_AS(normalize_weights(negative), Error);
  try {
    normalize_weights(Vector::Zero(2));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInvalidWeights);
  }
}

TEST_CASE("normalize_weights is idempotent and sums to one") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    Vector w(1 + trial % 17);
    for (auto& v : w) v = u(rng);
    const Vector once = normalize_weights(w);
    CHECK(std::abs(once.sum() - 1.0) <= 1e-12);
    CHECK(normalize_weights(once) == once);
  }
}

TEST_CASE("ObservationSet rescales weights with a warning") {
  std::string captured;
  set_warning_sink([&captured](const std::string& m) { captured = m; });
  Vector y(2), w(2);
  y << 1, 2;
  w << 1, 3;
  ObservationSet obs(y, Matrix::Ones(2, 1), w);
  CHECK(obs.w()[1] == doctest::Approx(0.75));
  CHECK(!captured.empty());
  set_warning_sink(nullptr);

  CHECK_THROWS_AS(ObservationSet(Vector(0), Matrix(0, 1)), Error);
  Vector bad(1);
  bad << std::nan("");
  CHECK_THROWS_AS(ObservationSet(bad, Matrix::Ones(1, 1)), Error);
}

TEST_CASE("assemble_design") {
  Matrix one(1, 1);
  one << 5;
  Matrix expect1(1, 2);
  expect1 << 1, 5;
  CHECK(assemble_design(one).xr() == expect1);

  Matrix x(2, 2);
  x << 1, 2, 3, 4;
  Matrix expect2(2, 3);
  expect2 << 1, 1, 2, 1, 3, 4;
  CHECK(assemble_design(x).xr() == expect2);
  CHECK(assemble_design(x).xr().rightCols(2) == x);

  CHECK_THROWS_AS(assemble_design(Matrix(0, 2)), Error);
  // Intercept-only design.
  CHECK(assemble_design(Matrix(3, 0)).xr() == Matrix::Ones(3, 1));
}

TEST_CASE("ConstraintSet") {
  SUBCASE("rejects intercept entries") {
    Matrix air(1, 3);
    air << 1, 0, 1;
    CHECK_THROWS_AS(ConstraintSet(air, Vector::Zero(1), Matrix(0, 3), Matrix(0, 3)), Error);
  }
  SUBCASE("row count of air must match iw") {
    CHECK_THROWS_AS(ConstraintSet(Matrix::Zero(2, 3), Vector::Zero(1), Matrix(0, 3), Matrix(0, 3)),
                    Error);
  }
  SUBCASE("triplets address score columns and get a zero intercept column") {
    const std::vector<Triplet> ap{{0, 1, 1.0}, {0, 2, -1.0}, {1, 2, 1.0}};
    const auto cs = ConstraintSet::from_triplets(2, {}, Vector(0), {}, 0, ap, 2);
    Matrix expected(2, 3);
    expected << 0, 1, -1, 0, 0, 1;
    CHECK(cs.apr() == expected);
    CHECK(cs.air().rows() == 0);
    const std::vector<Triplet> intercept{{0, 0, 1.0}};
    CHECK_THROWS_AS(ConstraintSet::from_triplets(2, {}, Vector(0), {}, 0, intercept, 1), Error);
  }
  SUBCASE("intercept-only model admits only empty constraints") {
    const auto cs = ConstraintSet::from_triplets(0, {}, Vector(0), {}, 0, {}, 0);
    CHECK(cs.empty());
    const std::vector<Triplet> any{{0, 1, 1.0}};
    CHECK_THROWS_AS(ConstraintSet::from_triplets(0, {}, Vector(0), {}, 0, any, 1), Error);
  }
}

TEST_CASE("CharacteristicLayout") {
  CharacteristicLayout layout({{"a", {1, 2}}, {"b", {3}}});
  CHECK(layout.find("b").columns.size() == 1);
  CHECK_THROWS_AS(layout.find("missing"), Error);
  CHECK_THROWS_AS(CharacteristicLayout(std::vector<Characteristic>{{"a", {0}}}), Error);
  CHECK_THROWS_AS(CharacteristicLayout(std::vector<Characteristic>{{"a", {1}}, {"b", {1}}}), Error);
  CHECK_THROWS_AS(layout.check_against(3), Error);
  CHECK_NOTHROW(layout.check_against(4));
}

TEST_CASE("Coefficients") {
  Vector b(3);
  b << 1, 2, 3;
  Coefficients c(b);
  CHECK(c.intercept() == 1);
  CHECK(c.weights().size() == 2);
  CHECK_THROWS_AS(Coefficients(Vector(0)), Error);
}
