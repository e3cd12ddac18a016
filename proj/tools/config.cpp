#include "config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "app_error.hpp"

namespace serls::app {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty()) return path;
  const fs::path p(path);
  return p.is_absolute() ? path : (fs::path(base_dir) / p).lexically_normal().string();
}

template <typename T>
T get(const json& j, const char* key, const char* where) {
  if (!j.contains(key)) throw DataError(std::string("config: missing '") + key + "' in " + where);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw DataError(std::string("config: '") + key + "' in " + where + " has the wrong type");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const char* where) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return get<T>(j, key, where);
}

std::vector<NamedTriplet> parse_triplets(const json& block, const char* key) {
  std::vector<NamedTriplet> out;
  if (!block.contains(key)) return out;
  const json& arr = block.at(key);
  if (!arr.is_array()) throw DataError(std::string("config: constraints.") + key + " must be an array");
  for (const auto& t : arr) {
    NamedTriplet nt{get<long>(t, "row", key), get<std::string>(t, "column", key),
                    get<double>(t, "value", key)};
    if (nt.row < 0) throw DataError(std::string("config: negative row in constraints.") + key);
    out.push_back(std::move(nt));
  }
  return out;
}

long rows_needed(const std::vector<NamedTriplet>& ts) {
  long r = 0;
  for (const auto& t : ts) r = std::max(r, t.row + 1);
  return r;
}

json triplets_json(const std::vector<NamedTriplet>& ts) {
  json arr = json::array();
  for (const auto& t : ts) arr.push_back({{"row", t.row}, {"column", t.column}, {"value", t.value}});
  return arr;
}

}  // namespace

long RunConfig::equality_rows() const { return rows_needed(ac); }
long RunConfig::inequality_rows() const { return rows_needed(ap); }

RunConfig parse_config(const json& j, const std::string& base_dir) {
  if (!j.is_object()) throw DataError("config: top level must be an object");
  RunConfig cfg;
  cfg.data_path = resolve(get<std::string>(j, "data", "config"), base_dir);
  cfg.y_column = get<std::string>(j, "y_column", "config");
  if (j.contains("weight_column") && !j.at("weight_column").is_null())
    cfg.weight_column = get<std::string>(j, "weight_column", "config");

  if (j.contains("characteristics")) {
    for (const auto& g : j.at("characteristics")) {
      GroupConfig gc{get<std::string>(g, "name", "characteristics"),
                     get<std::vector<std::string>>(g, "columns", "characteristics")};
      cfg.characteristics.push_back(std::move(gc));
    }
  }
  if (j.contains("design_columns")) {
    cfg.design_columns = get<std::vector<std::string>>(j, "design_columns", "config");
  } else {
    for (const auto& g : cfg.characteristics)
      for (const auto& c : g.columns)
        if (std::find(cfg.design_columns.begin(), cfg.design_columns.end(), c) ==
            cfg.design_columns.end())
          cfg.design_columns.push_back(c);
  }
  std::set<std::string> unique(cfg.design_columns.begin(), cfg.design_columns.end());
  if (unique.size() != cfg.design_columns.size())
    throw DataError("config: design_columns contains duplicates");
  if (unique.count(cfg.y_column))
    throw DataError("config: y_column '" + cfg.y_column + "' is also a design column");
  for (const auto& g : cfg.characteristics)
    for (const auto& c : g.columns)
      if (!unique.count(c))
        throw DataError("config: characteristic '" + g.name + "' column '" + c +
                        "' is not a design column");

  if (j.contains("constraints")) {
    const json& cj = j.at("constraints");
    cfg.ai = parse_triplets(cj, "ai");
    cfg.iw = get_or<std::vector<double>>(cj, "iw", {}, "constraints");
    cfg.ac = parse_triplets(cj, "ac");
    cfg.ap = parse_triplets(cj, "ap");
    if (rows_needed(cfg.ai) > static_cast<long>(cfg.iw.size()))
      throw DataError("config: constraints.ai uses more rows than constraints.iw provides");
  }
  for (const auto* ts : {&cfg.ai, &cfg.ac, &cfg.ap})
    for (const auto& t : *ts)
      if (!unique.count(t.column))
        throw DataError("config: constraint column '" + t.column + "' is not a design column");

  cfg.lambda = get_or<double>(j, "lambda", 0.0, "config");
  if (j.contains("robust")) {
    const json& rj = j.at("robust");
    cfg.robust.enabled = get_or<bool>(rj, "enabled", true, "robust");
    cfg.robust.m = get_or<double>(rj, "m", 1.5, "robust");
    if (rj.contains("epsilon") && !rj.at("epsilon").is_null())
      cfg.robust.epsilon = get<double>(rj, "epsilon", "robust");
    cfg.robust.max_iterations = get_or<int>(rj, "max_iterations", 50, "robust");
  }
  if (j.contains("step2")) {
    for (const auto& s : j.at("step2")) {
      Step2Config sc;
      sc.name = get<std::string>(s, "name", "step2");
      sc.column = get_or<std::string>(s, "column", sc.name, "step2");
      sc.knots = get_or<std::vector<double>>(s, "knots", {}, "step2");
      sc.degree = get_or<int>(s, "degree", 3, "step2");
      if (s.contains("domain") && !s.at("domain").is_null()) {
        const auto d = get<std::vector<double>>(s, "domain", "step2");
        if (d.size() != 2) throw DataError("config: step2 domain must have two entries");
        sc.domain = std::make_pair(d[0], d[1]);
      }
      cfg.step2.push_back(std::move(sc));
    }
  }
  if (j.contains("validation") && !j.at("validation").is_null())
    cfg.validation_path = resolve(get<std::string>(j, "validation", "config"), base_dir);
  cfg.output_path = resolve(get_or<std::string>(j, "output", "model.json", "config"), base_dir);
  cfg.mc_output_path =
      resolve(get_or<std::string>(j, "mc_output", "mc_report.json", "config"), base_dir);
  cfg.predict_output_path =
      resolve(get_or<std::string>(j, "predict_output", "scored.csv", "config"), base_dir);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j, fs::path(path).parent_path().string());
}

nlohmann::ordered_json to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["data"] = cfg.data_path;
  j["y_column"] = cfg.y_column;
  j["weight_column"] = cfg.weight_column ? json(*cfg.weight_column) : json(nullptr);
  j["design_columns"] = cfg.design_columns;
  auto groups = nlohmann::ordered_json::array();
  for (const auto& g : cfg.characteristics)
    groups.push_back({{"name", g.name}, {"columns", g.columns}});
  j["characteristics"] = groups;
  j["constraints"] = {{"ai", triplets_json(cfg.ai)},
                      {"iw", cfg.iw},
                      {"ac", triplets_json(cfg.ac)},
                      {"ap", triplets_json(cfg.ap)}};
  j["lambda"] = cfg.lambda;
  j["robust"] = {{"enabled", cfg.robust.enabled},
                 {"m", cfg.robust.m},
                 {"epsilon", cfg.robust.epsilon ? json(*cfg.robust.epsilon) : json(nullptr)},
                 {"max_iterations", cfg.robust.max_iterations}};
  auto steps = nlohmann::ordered_json::array();
  for (const auto& s : cfg.step2) {
    nlohmann::ordered_json sj;
    sj["name"] = s.name;
    sj["column"] = s.column;
    sj["knots"] = s.knots;
    sj["degree"] = s.degree;
    sj["domain"] = s.domain ? json::array({s.domain->first, s.domain->second}) : json(nullptr);
    steps.push_back(sj);
  }
  j["step2"] = steps;
  j["validation"] = cfg.validation_path ? json(*cfg.validation_path) : json(nullptr);
  j["output"] = cfg.output_path;
  j["mc_output"] = cfg.mc_output_path;
  j["predict_output"] = cfg.predict_output_path;
  return j;
}

}  // namespace serls::app
