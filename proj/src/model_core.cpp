#include "serls/model_core.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace serls {
namespace {

constexpr double kWeightSumTol = 1e-12;

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorKind::kInvalidInput, msg);
}

bool all_finite(const Matrix& m) { return m.array().isFinite().all(); }
bool all_finite(const Vector& v) { return v.array().isFinite().all(); }

Matrix dense_from_triplets(std::span<const Triplet> entries, Eigen::Index rows,
                           Eigen::Index p, const char* label) {
  Matrix m = Matrix::Zero(rows, p + 1);
  for (const auto& t : entries) {
    if (t.row < 0 || t.row >= rows || t.col < 1 || t.col > p) {
      std::ostringstream os;
      os << label << " entry (" << t.row << ", " << t.col
         << ") outside " << rows << " rows x score columns 1.." << p;
      throw Error(ErrorKind::kInvalidInput, os.str());
    }
    require(std::isfinite(t.value), std::string(label) + " has a non-finite entry");
    m(t.row, t.col) += t.value;
  }
  return m;
}

}  // namespace

Vector normalize_weights(const Vector& w_raw) {
  if (w_raw.size() == 0)
    throw Error(ErrorKind::kInvalidWeights, "weight vector is empty");
  if (!all_finite(w_raw) || (w_raw.array() < 0.0).any())
    throw Error(ErrorKind::kInvalidWeights,
                "weights must be finite and nonnegative");
  const double total = w_raw.sum();
  if (!(total > 0.0))
    throw Error(ErrorKind::kInvalidWeights, "weights are all zero");
  if (std::abs(total - 1.0) <= kWeightSumTol) return w_raw;
  return w_raw / total;
}

ObservationSet::ObservationSet(Vector y, Matrix x_raw, Vector w)
    : y_(std::move(y)), x_raw_(std::move(x_raw)) {
  require(y_.size() >= 1, "observation set needs at least one row");
  require(x_raw_.rows() == y_.size(), "x_raw row count differs from y length");
  require(w.size() == y_.size(), "weight vector length differs from y length");
  require(all_finite(y_), "y contains non-finite values");
  require(all_finite(x_raw_), "x_raw contains non-finite values");
  w_ = normalize_weights(w);
  if (std::abs(w.sum() - 1.0) > kWeightSumTol) {
    std::ostringstream os;
    os << "sample weights summed to " << w.sum() << "; rescaled to sum to 1";
    warn(os.str());
  }
}

ObservationSet::ObservationSet(Vector y, Matrix x_raw)
    : ObservationSet(y, std::move(x_raw),
                     Vector::Constant(y.size(), y.size() > 0 ? 1.0 / y.size() : 0.0)) {}

DesignMatrix::DesignMatrix(Matrix xr) : xr_(std::move(xr)) {
  require(xr_.rows() >= 1 && xr_.cols() >= 1, "design matrix is empty");
  require((xr_.col(0).array() == 1.0).all(),
          "design matrix column 0 must be all ones");
  require(all_finite(xr_), "design matrix contains non-finite values");
}

DesignMatrix assemble_design(const Matrix& x_raw) {
  require(x_raw.rows() >= 1, "cannot assemble a design from zero rows");
  Matrix xr(x_raw.rows(), x_raw.cols() + 1);
  xr.col(0).setOnes();
  xr.rightCols(x_raw.cols()) = x_raw;
  return DesignMatrix(std::move(xr));
}

PenaltySpec::PenaltySpec(double l) : lambda(l) {
  require(std::isfinite(l) && l >= 0.0, "penalty lambda must be finite and >= 0");
}

ConstraintSet::ConstraintSet(Eigen::Index p)
    : air_(0, p + 1), iw_(0), acr_(0, p + 1), apr_(0, p + 1) {
  require(p >= 0, "negative score column count");
}

ConstraintSet::ConstraintSet(Matrix air, Vector iw, Matrix acr, Matrix apr)
    : air_(std::move(air)), iw_(std::move(iw)), acr_(std::move(acr)),
      apr_(std::move(apr)) {
  const auto cols = air_.cols();
  require(cols >= 1, "constraint matrices need at least the intercept column");
  require(acr_.cols() == cols && apr_.cols() == cols,
          "constraint matrices disagree on column count");
  require(air_.rows() == iw_.size(), "Air row count differs from IW length");
  require(all_finite(air_) && all_finite(iw_) && all_finite(acr_) &&
              all_finite(apr_),
          "constraint set contains non-finite values");
  for (const Matrix* m : {&air_, &acr_, &apr_})
    require(m->rows() == 0 || (m->col(0).array() == 0.0).all(),
            "constraint rows must not involve the intercept column");
}

ConstraintSet ConstraintSet::from_triplets(Eigen::Index p,
                                           std::span<const Triplet> ai,
                                           Vector iw,
                                           std::span<const Triplet> ac,
                                           Eigen::Index mc,
                                           std::span<const Triplet> ap,
                                           Eigen::Index mp) {
  require(p >= 0 && mc >= 0 && mp >= 0, "negative constraint dimensions");
  const auto mi = iw.size();
  return ConstraintSet(dense_from_triplets(ai, mi, p, "Ai"), std::move(iw),
                       dense_from_triplets(ac, mc, p, "Ac"),
                       dense_from_triplets(ap, mp, p, "Ap"));
}

CharacteristicLayout::CharacteristicLayout(std::vector<Characteristic> groups)
    : groups_(std::move(groups)) {
  std::set<std::string> names;
  std::set<Eigen::Index> seen;
  for (const auto& g : groups_) {
    require(!g.name.empty(), "characteristic name is empty");
    require(names.insert(g.name).second,
            "duplicate characteristic name '" + g.name + "'");
    for (auto c : g.columns) {
      require(c >= 1, "characteristic '" + g.name +
                          "' references the intercept column");
      require(seen.insert(c).second,
              "characteristic '" + g.name + "' overlaps another group");
    }
  }
}

const Characteristic& CharacteristicLayout::find(const std::string& name) const {
  for (const auto& g : groups_)
    if (g.name == name) return g;
  throw Error(ErrorKind::kInvalidInput, "unknown characteristic '" + name + "'");
}

void CharacteristicLayout::check_against(Eigen::Index design_cols) const {
  for (const auto& g : groups_)
    for (auto c : g.columns)
      require(c < design_cols, "characteristic '" + g.name +
                                   "' references a column beyond the design");
}

Coefficients::Coefficients(Vector beta) : beta_(std::move(beta)) {
  require(beta_.size() >= 1, "coefficient vector is empty");
  require(all_finite(beta_), "coefficients contain non-finite values");
}

}  // namespace serls
