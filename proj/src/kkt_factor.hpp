#pragma once

#include <Eigen/Dense>

#include <vector>

#include <lapacke.h>

namespace serls::detail {

/// Bunch-Kaufman factorization of a symmetric (possibly indefinite) matrix.
class SymmetricIndefiniteFactor {
 public:
  /// Returns false when the matrix is exactly singular.
  bool compute(const Eigen::MatrixXd& k);
  /// Solves K x = rhs with one step of iterative refinement.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

 private:
  Eigen::VectorXd raw_solve(const Eigen::VectorXd& rhs) const;

  Eigen::MatrixXd original_;
  Eigen::MatrixXd factor_;
  std::vector<lapack_int> pivots_;
};

}  // namespace serls::detail
