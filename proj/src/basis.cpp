#include "serls/basis.hpp"

#include <algorithm>
#include <cmath>

namespace serls {
namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorKind::kInvalidInput, "spline spec: " + msg);
}

}  // namespace

void SplineSpec::validate() const {
  require(degree >= 0 && degree <= 5, "degree must be in 0..5");
  require(std::isfinite(domain_min) && std::isfinite(domain_max) &&
              domain_min < domain_max,
          "domain must be a finite interval with min < max");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    require(std::isfinite(knots[i]) && knots[i] > domain_min && knots[i] < domain_max,
            "interior knots must lie strictly inside the domain");
    require(i == 0 || knots[i] > knots[i - 1], "knots must be strictly increasing");
  }
}

std::vector<double> SplineSpec::clamped_knots() const {
  std::vector<double> t;
  t.reserve(knots.size() + 2 * static_cast<std::size_t>(degree + 1));
  t.insert(t.end(), static_cast<std::size_t>(degree + 1), domain_min);
  t.insert(t.end(), knots.begin(), knots.end());
  t.insert(t.end(), static_cast<std::size_t>(degree + 1), domain_max);
  return t;
}

Matrix bspline_basis(const Vector& x, const SplineSpec& spec) {
  spec.validate();
  require(x.allFinite(), "evaluation points must be finite");
  const std::vector<double> t = spec.clamped_knots();
  const int p = spec.degree;
  const Eigen::Index q = spec.num_basis();
  Matrix out = Matrix::Zero(x.size(), q);

  std::vector<double> n(static_cast<std::size_t>(p + 1));
  for (Eigen::Index row = 0; row < x.size(); ++row) {
    const double u = std::clamp(x[row], spec.domain_min, spec.domain_max);
    // Span s with t[s] <= u < t[s+1]; the right end belongs to the last span.
    auto it = std::upper_bound(t.begin() + p, t.end() - p - 1, u);
    const Eigen::Index span =
        std::min<Eigen::Index>(static_cast<Eigen::Index>(it - t.begin()) - 1, q - 1);

    // Triangular Cox-de Boor recursion over the p+1 functions nonzero on span.
    n[0] = 1.0;
    for (int d = 1; d <= p; ++d) {
      double saved = 0.0;
      for (int r = 0; r < d; ++r) {
        const double hi = t[static_cast<std::size_t>(span + r + 1)];
        const double lo = t[static_cast<std::size_t>(span + r + 1 - d)];
        const double temp = n[static_cast<std::size_t>(r)] / (hi - lo);
        n[static_cast<std::size_t>(r)] = saved + (hi - u) * temp;
        saved = (u - lo) * temp;
      }
      n[static_cast<std::size_t>(d)] = saved;
    }
    for (int r = 0; r <= p; ++r) out(row, span - p + r) = n[static_cast<std::size_t>(r)];
  }
  return out;
}

}  // namespace serls
