#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace serls {

/// Failure classes. The CLI maps these onto exit codes.
enum class ErrorKind {
  kInvalidInput,       // bad dimensions, non-finite values, bad parameters
  kInvalidWeights,
  kInfeasible,         // constraint set has no feasible point
  kSolverFailure,      // QP did not certify a solution
  kDegenerateVariance  // winsorized outcome has zero spread
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Receives non-fatal diagnostics (weight normalization and similar).
/// Defaults to writing "warning: <msg>" on stderr.
using WarningSink = std::function<void(const std::string&)>;
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace serls
