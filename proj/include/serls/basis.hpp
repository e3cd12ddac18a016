#pragma once

#include <vector>

#include "serls/model_core.hpp"

namespace serls {

/// B-spline basis on a clamped knot vector: the domain ends are repeated
/// degree + 1 times around the interior knots.
struct SplineSpec {
  std::vector<double> knots;  // interior, strictly increasing
  int degree = 3;
  double domain_min = 0.0;
  double domain_max = 1.0;

  void validate() const;
  Eigen::Index num_basis() const {
    return static_cast<Eigen::Index>(knots.size()) + degree + 1;
  }
  std::vector<double> clamped_knots() const;
};

/// n x num_basis() matrix of basis values (Cox-de Boor). Values outside the
/// domain are clamped to its ends.
Matrix bspline_basis(const Vector& x, const SplineSpec& spec);

}  // namespace serls
