#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace serls::app {

struct NamedTriplet {
  long row;
  std::string column;
  double value;
};

struct GroupConfig {
  std::string name;
  std::vector<std::string> columns;
};

struct Step2Config {
  std::string name;
  std::string column;
  std::vector<double> knots;
  int degree = 3;
  std::optional<std::pair<double, double>> domain;  // default: development range
};

struct RobustSettings {
  bool enabled = true;
  double m = 1.5;
  std::optional<double> epsilon;
  int max_iterations = 50;
};

/// Everything one run needs. Paths are resolved against the directory of
/// the configuration file when loaded.
struct RunConfig {
  std::string data_path;
  std::string y_column;
  std::optional<std::string> weight_column;
  std::vector<std::string> design_columns;
  std::vector<GroupConfig> characteristics;
  std::vector<NamedTriplet> ai;
  std::vector<double> iw;
  std::vector<NamedTriplet> ac;
  std::vector<NamedTriplet> ap;
  double lambda = 0.0;
  RobustSettings robust;
  std::vector<Step2Config> step2;
  std::optional<std::string> validation_path;
  std::string output_path = "model.json";
  std::string mc_output_path = "mc_report.json";
  std::string predict_output_path = "scored.csv";

  long equality_rows() const;   // max row in ac + 1
  long inequality_rows() const; // max row in ap + 1
};

/// Parses and checks structure (not data columns). Throws DataError.
RunConfig parse_config(const nlohmann::json& j, const std::string& base_dir);
RunConfig load_config(const std::string& path);

/// Fully resolved form, embedded in model files.
nlohmann::ordered_json to_json(const RunConfig& cfg);

}  // namespace serls::app
