#include "kkt_factor.hpp"

namespace serls::detail {

bool SymmetricIndefiniteFactor::compute(const Eigen::MatrixXd& k) {
  original_ = k;
  factor_ = k;
  const auto n = static_cast<lapack_int>(k.rows());
  pivots_.assign(static_cast<std::size_t>(n), 0);
  if (n == 0) return true;
  const lapack_int info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', n, factor_.data(),
                                         n, pivots_.data());
  return info == 0;
}

Eigen::VectorXd SymmetricIndefiniteFactor::raw_solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd x = rhs;
  const auto n = static_cast<lapack_int>(factor_.rows());
  if (n == 0) return x;
  LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L', n, 1, factor_.data(), n, pivots_.data(),
                 x.data(), n);
  return x;
}

Eigen::VectorXd SymmetricIndefiniteFactor::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd x = raw_solve(rhs);
  const Eigen::VectorXd r = rhs - original_ * x;
  x += raw_solve(r);
  return x;
}

}  // namespace serls::detail
