#pragma once

#include <string>
#include <utility>
#include <vector>

#include "serls/basis.hpp"
#include "serls/robust_fit.hpp"

namespace serls {

enum class SampleLabel { kDevelopment, kValidation };
const char* to_string(SampleLabel label);

/// A fitted model's winsorized view of one sample: the quantities every
/// marginal-contribution formula consumes.
struct WinsorizedSample {
  DesignMatrix design;
  Vector w;  // normalized
  Coefficients beta;
  double k;
  Vector e_star;
  Vector y_star;
};

/// Uses the fit's stored e* and y*.
WinsorizedSample development_sample(const RobustFitResult& fit,
                                    const EngineeredProblem& prob);

/// Winsorizes y_val - Xr_val beta with the development threshold fit.k.
WinsorizedSample validation_sample(const RobustFitResult& fit,
                                   const ObservationSet& val_obs,
                                   const DesignMatrix& val_design);

struct ObjectiveParts {
  double sse_star;
  double rlsv_y;
  double of;
};

/// SSE* = sum w e*^2, RLSV_y = sum w (y* - intercept)^2, OF = SSE*/RLSV_y.
/// Throws kDegenerateVariance when RLSV_y vanishes.
ObjectiveParts step1_objective(const WinsorizedSample& sample);
ObjectiveParts step1_objective(const RobustFitResult& fit, const Vector& w);

/// Zeroes the named characteristic's score weights (no refit) and returns
/// SSE_I / RLSV_y - OF.
double step1_marginal(const WinsorizedSample& sample,
                      const CharacteristicLayout& layout, const std::string& name);
double step1_marginal(const RobustFitResult& fit, const EngineeredProblem& prob,
                      const CharacteristicLayout& layout, const std::string& name);

/// Least squares of y* on [1 | basis_cols | s] with the coefficient of the
/// Step I score s = Xr beta pinned to 1; returns OF - SSE_II / RLSV_y.
double step2_marginal(const WinsorizedSample& sample, const Matrix& basis_cols);
double step2_marginal(const RobustFitResult& fit, const EngineeredProblem& prob,
                      const Matrix& basis_cols, const Vector& w);

/// Fitted values s_II of the pinned auxiliary fit.
Vector step2_fitted(const WinsorizedSample& sample, const Matrix& basis_cols);

struct Step2Candidate {
  std::string name;
  Vector values;  // characteristic value per row of the sample
  SplineSpec spec;
};

struct MarginalReport {
  double of = 0.0;
  double rlsv_y = 0.0;
  double sse_star = 0.0;
  std::vector<std::pair<std::string, double>> step1;
  std::vector<std::pair<std::string, double>> step2;
  SampleLabel sample_label = SampleLabel::kDevelopment;
};

MarginalReport evaluate_sample(const WinsorizedSample& sample,
                               const CharacteristicLayout& layout,
                               const std::vector<Step2Candidate>& step2,
                               SampleLabel label);

/// Validation report: development beta and k applied to a held-out sample.
MarginalReport evaluate_on_sample(const RobustFitResult& fit,
                                  const ObservationSet& val_obs,
                                  const DesignMatrix& val_design,
                                  const CharacteristicLayout& layout,
                                  const std::vector<Step2Candidate>& step2);

}  // namespace serls
