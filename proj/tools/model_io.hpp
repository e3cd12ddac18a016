#pragma once

#include <string>

#include <serls/robust_fit.hpp>

#include "config.hpp"

namespace serls::app {

inline constexpr const char* kModelSchema = "serls-model/1";

/// Everything persisted by `fit`. The configuration is embedded in resolved
/// form so later verbs need nothing else.
struct ModelFile {
  RunConfig config;
  Vector beta;
  double sigma = 0.0;
  double k = 0.0;  // +inf when robust fitting is disabled
  double epsilon = 0.0;
  int iterations = 1;
  bool converged = true;
  bool degenerate_scale = false;
  std::vector<IterationRecord> trace;
};

ModelFile model_from_fit(const RunConfig& cfg, const RobustFitResult& fit);
nlohmann::ordered_json to_json(const ModelFile& model);
/// Byte-stable: no timestamps, fixed key order.
void write_model(const std::string& path, const ModelFile& model);
ModelFile read_model(const std::string& path);

}  // namespace serls::app
