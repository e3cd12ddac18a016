#include "model_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "app_error.hpp"

namespace serls::app {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

ModelFile model_from_fit(const RunConfig& cfg, const RobustFitResult& fit) {
  ModelFile m;
  m.config = cfg;
  m.beta = fit.beta.beta();
  m.sigma = fit.sigma;
  m.k = fit.k;
  m.epsilon = fit.epsilon;
  m.iterations = fit.iterations;
  m.converged = fit.converged;
  m.degenerate_scale = fit.degenerate_scale;
  m.trace = fit.trace;
  return m;
}

ordered_json to_json(const ModelFile& m) {
  ordered_json j;
  j["schema"] = kModelSchema;
  auto coefs = ordered_json::array();
  coefs.push_back({{"column", "(intercept)"}, {"value", m.beta[0]}});
  for (std::size_t c = 0; c < m.config.design_columns.size(); ++c)
    coefs.push_back({{"column", m.config.design_columns[c]},
                     {"value", m.beta[static_cast<Eigen::Index>(c + 1)]}});
  j["coefficients"] = coefs;
  j["lambda"] = m.config.lambda;
  j["m"] = m.config.robust.m;
  ordered_json fit;
  fit["robust"] = m.config.robust.enabled;
  fit["sigma"] = finite_or_null(m.sigma);
  fit["k"] = finite_or_null(m.k);
  fit["epsilon"] = m.epsilon;
  fit["iterations"] = m.iterations;
  fit["converged"] = m.converged;
  fit["degenerate_scale"] = m.degenerate_scale;
  auto trace = ordered_json::array();
  for (const auto& t : m.trace)
    trace.push_back({{"iteration", t.iteration},
                     {"sigma", t.sigma},
                     {"k", t.k},
                     {"max_change", t.max_change}});
  fit["trace"] = trace;
  j["fit"] = fit;
  j["config"] = to_json(m.config);
  return j;
}

void write_model(const std::string& path, const ModelFile& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file '" + path + "'");
  out << to_json(model).dump(2) << '\n';
}

ModelFile read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read model file '" + path + "'");
  try {
    const json j = json::parse(in);
    if (j.value("schema", std::string()) != kModelSchema)
      throw DataError("model file '" + path + "' is not " + kModelSchema);
    ModelFile m;
    m.config = parse_config(j.at("config"), "");
    const auto& coefs = j.at("coefficients");
    if (coefs.size() != m.config.design_columns.size() + 1)
      throw DataError("model file '" + path + "': coefficient count differs from design");
    m.beta.resize(static_cast<Eigen::Index>(coefs.size()));
    for (std::size_t i = 0; i < coefs.size(); ++i) {
      const std::string expected =
          i == 0 ? "(intercept)" : m.config.design_columns[i - 1];
      if (coefs[i].at("column").get<std::string>() != expected)
        throw DataError("model file '" + path + "': coefficient " + std::to_string(i) +
                        " is not for column '" + expected + "'");
      m.beta[static_cast<Eigen::Index>(i)] = coefs[i].at("value").get<double>();
    }
    const auto& fit = j.at("fit");
    const double inf = std::numeric_limits<double>::infinity();
    m.sigma = fit.at("sigma").is_null() ? inf : fit.at("sigma").get<double>();
    m.k = fit.at("k").is_null() ? inf : fit.at("k").get<double>();
    m.epsilon = fit.at("epsilon").get<double>();
    m.iterations = fit.at("iterations").get<int>();
    m.converged = fit.at("converged").get<bool>();
    m.degenerate_scale = fit.at("degenerate_scale").get<bool>();
    for (const auto& t : fit.at("trace"))
      m.trace.push_back({t.at("iteration").get<int>(), t.at("sigma").get<double>(),
                         t.at("k").get<double>(), t.at("max_change").get<double>()});
    return m;
  } catch (const json::exception& e) {
    throw DataError("model file '" + path + "' is malformed: " + e.what());
  }
}

}  // namespace serls::app
