#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "serls/error.hpp"

namespace serls {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Rescales nonnegative weights so they sum to one. Throws kInvalidWeights on
/// negative, non-finite or all-zero input.
Vector normalize_weights(const Vector& w_raw);

/// Dependent variable, raw independent variables and normalized sample
/// weights for one sample. Immutable once built.
class ObservationSet {
 public:
  /// Weights that do not already sum to one are rescaled with a warning.
  ObservationSet(Vector y, Matrix x_raw, Vector w);
  /// Uniform weights 1/n.
  ObservationSet(Vector y, Matrix x_raw);

  const Vector& y() const { return y_; }
  const Matrix& x_raw() const { return x_raw_; }
  const Vector& w() const { return w_; }
  Eigen::Index n() const { return y_.size(); }
  Eigen::Index p() const { return x_raw_.cols(); }

 private:
  Vector y_;
  Matrix x_raw_;
  Vector w_;
};

/// n x (p+1) matrix whose column 0 is all ones.
class DesignMatrix {
 public:
  explicit DesignMatrix(Matrix xr);

  const Matrix& xr() const { return xr_; }
  Eigen::Index rows() const { return xr_.rows(); }
  Eigen::Index cols() const { return xr_.cols(); }

 private:
  Matrix xr_;
};

DesignMatrix assemble_design(const Matrix& x_raw);
inline DesignMatrix assemble_design(const ObservationSet& obs) {
  return assemble_design(obs.x_raw());
}

struct PenaltySpec {
  explicit PenaltySpec(double lambda = 0.0);
  double lambda;
};

/// Sparse entry of a constraint row, addressed against score columns 1..p.
struct Triplet {
  Eigen::Index row;
  Eigen::Index col;
  double value;
};

/// Score-engineering constraints Air*beta = iw, Acr*beta = 0, Apr*beta <= 0.
/// Every matrix has p+1 columns and a zero intercept column.
class ConstraintSet {
 public:
  /// No constraints on a model with p score columns.
  explicit ConstraintSet(Eigen::Index p = 0);

  /// Dense form; rejects any nonzero entry in column 0.
  ConstraintSet(Matrix air, Vector iw, Matrix acr, Matrix apr);

  /// Builds from triplets whose columns are 1-based score indices (1..p);
  /// the intercept column is prepended as zeros. Row counts are
  /// iw.size(), mc and mp respectively.
  static ConstraintSet from_triplets(Eigen::Index p,
                                     std::span<const Triplet> ai, Vector iw,
                                     std::span<const Triplet> ac,
                                     Eigen::Index mc,
                                     std::span<const Triplet> ap,
                                     Eigen::Index mp);

  const Matrix& air() const { return air_; }
  const Vector& iw() const { return iw_; }
  const Matrix& acr() const { return acr_; }
  const Matrix& apr() const { return apr_; }
  Eigen::Index cols() const { return air_.cols(); }
  bool empty() const {
    return air_.rows() == 0 && acr_.rows() == 0 && apr_.rows() == 0;
  }

 private:
  Matrix air_;
  Vector iw_;
  Matrix acr_;
  Matrix apr_;
};

struct Characteristic {
  std::string name;
  std::vector<Eigen::Index> columns;  // design-matrix indices, all >= 1
};

/// Disjoint named groups of design columns. The intercept is never grouped.
class CharacteristicLayout {
 public:
  CharacteristicLayout() = default;
  explicit CharacteristicLayout(std::vector<Characteristic> groups);

  const std::vector<Characteristic>& groups() const { return groups_; }
  /// Throws kInvalidInput for an unknown name.
  const Characteristic& find(const std::string& name) const;
  /// Checks every index is < design_cols.
  void check_against(Eigen::Index design_cols) const;

 private:
  std::vector<Characteristic> groups_;
};

/// beta[0] is the intercept, beta[1..p] the score weights.
class Coefficients {
 public:
  explicit Coefficients(Vector beta);

  const Vector& beta() const { return beta_; }
  double intercept() const { return beta_[0]; }
  auto weights() const { return beta_.tail(beta_.size() - 1); }
  Eigen::Index size() const { return beta_.size(); }

 private:
  Vector beta_;
};

}  // namespace serls
