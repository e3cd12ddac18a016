#include "commands.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include <serls/marginal.hpp>

#include "app_error.hpp"
#include "csv.hpp"
#include "model_io.hpp"

namespace serls::app {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string sibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  p.replace_extension();
  return p.string() + suffix;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
}

struct Sample {
  CsvTable table;
  ObservationSet obs;
  DesignMatrix design;
};

Sample load_sample(const RunConfig& cfg, const std::string& path) {
  CsvTable table = read_csv(path);
  std::vector<std::string> needed{cfg.y_column};
  if (cfg.weight_column) needed.push_back(*cfg.weight_column);
  needed.insert(needed.end(), cfg.design_columns.begin(), cfg.design_columns.end());
  for (const auto& s : cfg.step2) needed.push_back(s.column);
  for (const auto& c : needed)
    if (table.column_index(c) < 0)
      throw DataError("column '" + c + "' not found in '" + path + "'");
  if (table.rows.empty()) throw DataError("data file '" + path + "' has no data rows");

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  const auto p = static_cast<Eigen::Index>(cfg.design_columns.size());
  Vector y = table.numeric_column(cfg.y_column);
  Matrix x(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    x.col(j) = table.numeric_column(cfg.design_columns[static_cast<std::size_t>(j)]);
  Vector w = cfg.weight_column ? table.numeric_column(*cfg.weight_column)
                               : Vector::Constant(n, 1.0 / static_cast<double>(n));
  ObservationSet obs(std::move(y), x, std::move(w));
  DesignMatrix design = assemble_design(obs);
  return Sample{std::move(table), std::move(obs), std::move(design)};
}

Eigen::Index design_index(const RunConfig& cfg, const std::string& column) {
  for (std::size_t j = 0; j < cfg.design_columns.size(); ++j)
    if (cfg.design_columns[j] == column) return static_cast<Eigen::Index>(j + 1);
  throw DataError("column '" + column + "' is not a design column");
}

CharacteristicLayout make_layout(const RunConfig& cfg) {
  std::vector<Characteristic> groups;
  for (const auto& g : cfg.characteristics) {
    Characteristic c{g.name, {}};
    for (const auto& col : g.columns) c.columns.push_back(design_index(cfg, col));
    groups.push_back(std::move(c));
  }
  try {
    return CharacteristicLayout(std::move(groups));
  } catch (const Error& e) {
    throw DataError(std::string("config: ") + e.what());
  }
}

ConstraintSet make_constraints(const RunConfig& cfg) {
  auto convert = [&cfg](const std::vector<NamedTriplet>& ts) {
    std::vector<Triplet> out;
    for (const auto& t : ts) out.push_back({t.row, design_index(cfg, t.column), t.value});
    return out;
  };
  const auto ai = convert(cfg.ai);
  const auto ac = convert(cfg.ac);
  const auto ap = convert(cfg.ap);
  Vector iw = Eigen::Map<const Vector>(cfg.iw.data(), static_cast<Eigen::Index>(cfg.iw.size()));
  return ConstraintSet::from_triplets(static_cast<Eigen::Index>(cfg.design_columns.size()),
                                      ai, iw, ac, cfg.equality_rows(), ap,
                                      cfg.inequality_rows());
}

std::vector<Step2Candidate> make_step2(const RunConfig& cfg, const CsvTable& dev,
                                       const CsvTable& target) {
  std::vector<Step2Candidate> out;
  for (const auto& s : cfg.step2) {
    SplineSpec spec;
    spec.knots = s.knots;
    spec.degree = s.degree;
    if (s.domain) {
      spec.domain_min = s.domain->first;
      spec.domain_max = s.domain->second;
    } else {
      const Vector v = dev.numeric_column(s.column);
      spec.domain_min = v.minCoeff();
      spec.domain_max = v.maxCoeff();
    }
    try {
      spec.validate();
    } catch (const Error& e) {
      throw DataError("step2 '" + s.name + "': " + e.what());
    }
    out.push_back({s.name, target.numeric_column(s.column), spec});
  }
  return out;
}

std::vector<std::string> centering_warnings(const RunConfig& cfg, const Sample& sample) {
  std::vector<std::string> out;
  const Vector means = sample.design.xr().transpose() * sample.obs.w();
  for (Eigen::Index j = 1; j < means.size(); ++j)
    if (std::abs(means[j]) > 1e-6) {
      std::ostringstream os;
      os << "column '" << cfg.design_columns[static_cast<std::size_t>(j - 1)]
         << "' has weighted mean " << means[j]
         << "; the intercept is not a robust mean of y for uncentered columns";
      out.push_back(os.str());
    }
  return out;
}

// ---------------------------------------------------------------- fit

int cmd_fit(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  Sample dev = load_sample(cfg, cfg.data_path);
  EngineeredProblem prob(dev.obs, dev.design, make_constraints(cfg), PenaltySpec(cfg.lambda));
  const CharacteristicLayout layout = make_layout(cfg);

  RobustFitResult fit;
  if (cfg.robust.enabled) {
    RobustConfig rc;
    rc.m = cfg.robust.m;
    rc.epsilon = cfg.robust.epsilon;
    rc.max_iterations = cfg.robust.max_iterations;
    fit = fit_robust(prob, rc);
  } else {
    fit = fit_nonrobust(prob);
  }
  const ModelFile model = model_from_fit(cfg, fit);
  write_model(cfg.output_path, model);

  const Vector fitted = score(prob.design(), fit.beta);
  const auto& cs = prob.constraints();
  const Vector& beta = fit.beta.beta();
  const double eq_res = cs.air().rows() ? (cs.air() * beta - cs.iw()).lpNorm<Eigen::Infinity>() : 0.0;
  const double c_res = cs.acr().rows() ? (cs.acr() * beta).lpNorm<Eigen::Infinity>() : 0.0;
  const double p_res = cs.apr().rows() ? (cs.apr() * beta).maxCoeff() : 0.0;
  const auto warnings = centering_warnings(cfg, dev);

  ordered_json rj;
  rj["schema"] = "serls-fit-report/1";
  rj["n"] = dev.obs.n();
  rj["coefficients"] = to_json(model)["coefficients"];
  auto groups = ordered_json::array();
  for (const auto& g : layout.groups()) {
    auto cols = ordered_json::array();
    for (auto c : g.columns)
      cols.push_back({{"column", cfg.design_columns[static_cast<std::size_t>(c - 1)]},
                      {"value", beta[c]}});
    groups.push_back({{"name", g.name}, {"coefficients", cols}});
  }
  rj["characteristics"] = groups;
  std::optional<ObjectiveParts> parts;
  try {
    parts = step1_objective(development_sample(fit, prob));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kDegenerateVariance) throw;
    err << "warning: " << e.what() << '\n';
  }
  rj["of"] = parts ? ordered_json(parts->of) : ordered_json(nullptr);
  rj["sse_star"] = parts ? ordered_json(parts->sse_star) : ordered_json(nullptr);
  rj["rlsv_y"] = parts ? ordered_json(parts->rlsv_y) : ordered_json(nullptr);
  rj["constraint_residuals"] = {{"air_minus_iw_max_abs", eq_res},
                                {"acr_max_abs", c_res},
                                {"apr_max", p_res}};
  rj["fit"] = to_json(model)["fit"];
  rj["warnings"] = warnings;
  rj["fitted_scores"] = std::vector<double>(fitted.data(), fitted.data() + fitted.size());
  write_text(sibling(cfg.output_path, ".report.json"), rj.dump(2) + "\n");

  std::ostringstream txt;
  txt << std::setprecision(10);
  txt << "Score-engineered " << (cfg.robust.enabled ? "robust " : "")
      << "least squares fit\n";
  txt << "data: " << cfg.data_path << "  (n = " << dev.obs.n() << ")\n";
  txt << "lambda = " << cfg.lambda;
  if (cfg.robust.enabled)
    txt << "  m = " << cfg.robust.m << "  sigma = " << fit.sigma << "  k = " << fit.k
        << "  iterations = " << fit.iterations
        << "  converged = " << (fit.converged ? "yes" : "no");
  txt << "\n\n";
  txt << std::left << std::setw(24) << "column" << std::right << std::setw(20) << "coefficient" << '\n';
  txt << std::left << std::setw(24) << "(intercept)" << std::right << std::setw(20) << beta[0] << '\n';
  for (const auto& g : layout.groups()) {
    txt << "[" << g.name << "]\n";
    for (auto c : g.columns)
      txt << std::left << std::setw(24) << ("  " + cfg.design_columns[static_cast<std::size_t>(c - 1)])
          << std::right << std::setw(20) << beta[c] << '\n';
  }
  std::set<Eigen::Index> grouped;
  for (const auto& g : layout.groups()) grouped.insert(g.columns.begin(), g.columns.end());
  for (Eigen::Index c = 1; c < beta.size(); ++c)
    if (!grouped.count(c))
      txt << std::left << std::setw(24) << cfg.design_columns[static_cast<std::size_t>(c - 1)]
          << std::right << std::setw(20) << beta[c] << '\n';
  txt << '\n';
  if (parts)
    txt << "OF = " << parts->of << "  (SSE* = " << parts->sse_star
        << ", RLSV_y = " << parts->rlsv_y << ")\n";
  txt << "constraint residuals: |Air b - IW| = " << eq_res << "  |Acr b| = " << c_res
      << "  max(Apr b) = " << p_res << '\n';
  for (const auto& w : warnings) txt << "warning: " << w << '\n';
  write_text(sibling(cfg.output_path, ".report.txt"), txt.str());

  out << "wrote " << cfg.output_path << '\n';
  if (fit.degenerate_scale) {
    err << "error: degenerate robust scale (sigma = " << fit.sigma
        << "); more than half the weight sits on zero residuals\n";
    return kExitNumerical;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- mc

ordered_json report_json(const MarginalReport& r) {
  ordered_json j;
  j["sample"] = to_string(r.sample_label);
  j["of"] = r.of;
  j["sse_star"] = r.sse_star;
  j["rlsv_y"] = r.rlsv_y;
  auto s1 = ordered_json::array();
  for (const auto& [name, v] : r.step1) s1.push_back({{"name", name}, {"mci", v}});
  j["step1"] = s1;
  auto s2 = ordered_json::array();
  for (const auto& [name, v] : r.step2) s2.push_back({{"name", name}, {"mcii", v}});
  j["step2"] = s2;
  return j;
}

void report_text(const MarginalReport& r, std::ostream& txt) {
  txt << "sample: " << to_string(r.sample_label) << '\n';
  txt << std::setprecision(8) << "OF = " << r.of << "  SSE* = " << r.sse_star
      << "  RLSV_y = " << r.rlsv_y << "\n\n";
  txt << std::left << std::setw(28) << "Step I characteristic" << std::right << std::setw(16)
      << "MCI" << '\n';
  for (const auto& [name, v] : r.step1)
    txt << std::left << std::setw(28) << name << std::right << std::setw(16) << v << '\n';
  txt << '\n' << std::left << std::setw(28) << "Step II characteristic" << std::right
      << std::setw(16) << "MCII" << '\n';
  for (const auto& [name, v] : r.step2)
    txt << std::left << std::setw(28) << name << std::right << std::setw(16) << v << '\n';
  txt << '\n';
}

int cmd_mc(const RunConfig& cfg, const ModelFile& model, std::ostream& out) {
  if (model.config.design_columns != cfg.design_columns)
    throw DataError("model design columns differ from the configuration");
  Sample dev = load_sample(cfg, cfg.data_path);
  const CharacteristicLayout layout = make_layout(cfg);
  layout.check_against(dev.design.cols());

  RobustFitResult fit;
  fit.beta = Coefficients(model.beta);
  fit.k = model.k;
  fit.sigma = model.sigma;
  winsorize_outcome(dev.obs.y(), score(dev.design, fit.beta), fit.k, fit.e_star, fit.y_star);
  WinsorizedSample dev_sample{dev.design, dev.obs.w(), fit.beta, fit.k, fit.e_star, fit.y_star};

  std::vector<MarginalReport> reports;
  reports.push_back(evaluate_sample(dev_sample, layout, make_step2(cfg, dev.table, dev.table),
                                    SampleLabel::kDevelopment));
  if (cfg.validation_path) {
    Sample val = load_sample(cfg, *cfg.validation_path);
    reports.push_back(evaluate_on_sample(fit, val.obs, val.design, layout,
                                         make_step2(cfg, dev.table, val.table)));
  }

  ordered_json j;
  j["schema"] = "serls-mc/1";
  j["model_k"] = std::isfinite(model.k) ? ordered_json(model.k) : ordered_json(nullptr);
  auto arr = ordered_json::array();
  for (const auto& r : reports) arr.push_back(report_json(r));
  j["reports"] = arr;
  write_text(cfg.mc_output_path, j.dump(2) + "\n");

  std::ostringstream txt;
  txt << "Marginal contributions\n\n";
  for (const auto& r : reports) report_text(r, txt);
  write_text(sibling(cfg.mc_output_path, ".txt"), txt.str());
  out << "wrote " << cfg.mc_output_path << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- predict

int cmd_predict(const ModelFile& model, const std::string& data_path,
                const std::string& output_path, std::ostream& out, std::ostream& err) {
  const RunConfig& cfg = model.config;
  CsvTable table = read_csv(data_path);
  std::vector<std::string> missing;
  for (const auto& c : cfg.design_columns)
    if (table.column_index(c) < 0) missing.push_back(c);
  if (!missing.empty()) {
    std::string msg = "data file '" + data_path + "' is missing model columns:";
    for (const auto& c : missing) msg += " " + c;
    throw DataError(msg);
  }
  std::vector<std::string> unused;
  const std::set<std::string> used(cfg.design_columns.begin(), cfg.design_columns.end());
  for (const auto& h : table.header)
    if (!used.count(h)) unused.push_back(h);
  if (!unused.empty()) {
    err << "warning: ignoring columns not used by the model:";
    for (const auto& c : unused) err << ' ' << c;
    err << '\n';
  }

  std::ofstream file(output_path, std::ios::binary);
  if (!file) throw DataError("cannot write '" + output_path + "'");
  file << table.raw_header << ",score\n";
  if (!table.rows.empty()) {
    const auto n = static_cast<Eigen::Index>(table.rows.size());
    const auto p = static_cast<Eigen::Index>(cfg.design_columns.size());
    Matrix x(n, p);
    for (Eigen::Index j = 0; j < p; ++j)
      x.col(j) = table.numeric_column(cfg.design_columns[static_cast<std::size_t>(j)]);
    const Vector s = score(assemble_design(x), Coefficients(model.beta));
    for (Eigen::Index i = 0; i < n; ++i)
      file << table.raw_lines[static_cast<std::size_t>(i)] << ',' << format_double(s[i]) << '\n';
  }
  out << "wrote " << output_path << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthOptions {
  std::uint64_t seed = 1;
  long rows = 1000;
  double outlier_fraction = 0.0;
  double v_effect = 0.0;
  double noise_sd = 0.5;
};

int cmd_synth(const SynthOptions& o, const std::string& output_path, std::ostream& out) {
  if (o.rows < 0) throw DataError("synth: rows must be nonnegative");
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> centered(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, o.noise_sd);
  std::ofstream file(output_path, std::ios::binary);
  if (!file) throw DataError("cannot write '" + output_path + "'");
  file << "x1,x2,noise,v,y\n";
  for (long i = 0; i < o.rows; ++i) {
    const double x1 = centered(rng);
    const double x2 = centered(rng);
    const double z = centered(rng);
    const double v = unit(rng);
    double y = 2.0 + 1.5 * x1 - 1.0 * x2 + o.v_effect * (v > 0.5 ? 1.0 : -1.0) + noise(rng);
    if (unit(rng) < o.outlier_fraction) y += 50.0 * (1.0 + unit(rng));
    file << format_double(x1) << ',' << format_double(x2) << ',' << format_double(z) << ','
         << format_double(v) << ',' << format_double(y) << '\n';
  }
  out << "wrote " << output_path << '\n';
  return kExitOk;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput:
    case ErrorKind::kInvalidWeights:
      return kExitData;
    default:
      return kExitNumerical;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Score-engineered robust least squares"};
  app.require_subcommand(1);

  std::string config_path, output_override, model_path, data_path;
  SynthOptions synth;

  auto* fit = app.add_subcommand("fit", "Fit a model and write the model file and report");
  fit->add_option("--config", config_path, "Run configuration (JSON)")->required();
  fit->add_option("--output", output_override, "Model file path (overrides config)");

  auto* mc = app.add_subcommand("mc", "Compute Step I / Step II marginal contributions");
  mc->add_option("--config", config_path, "Run configuration (JSON)");
  mc->add_option("--model", model_path, "Model file (default: the config's output)");
  mc->add_option("--output", output_override, "Report path (overrides config)");

  auto* predict = app.add_subcommand("predict", "Append model scores to a data file");
  predict->add_option("--config", config_path, "Run configuration (JSON)");
  predict->add_option("--model", model_path, "Model file (default: the config's output)");
  predict->add_option("--data", data_path, "Data to score (default: the config's data)");
  predict->add_option("--output", output_override, "Scored file path");

  auto* gen = app.add_subcommand("synth", "Write a seeded synthetic fixture data set");
  gen->add_option("--seed", synth.seed, "Random seed")->required();
  gen->add_option("--rows", synth.rows, "Number of rows");
  gen->add_option("--outlier-fraction", synth.outlier_fraction, "Share of rows shifted upward");
  gen->add_option("--v-effect", synth.v_effect, "Strength of the held-out variable v");
  gen->add_option("--noise-sd", synth.noise_sd, "Residual standard deviation");
  gen->add_option("--output", output_override, "Output CSV")->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }

  try {
    if (fit->parsed()) {
      RunConfig cfg = load_config(config_path);
      if (!output_override.empty()) cfg.output_path = output_override;
      return cmd_fit(cfg, out, err);
    }
    if (gen->parsed()) return cmd_synth(synth, output_override, out);

    std::optional<RunConfig> cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (model_path.empty()) {
      if (!cfg) throw DataError("either --config or --model is required");
      model_path = cfg->output_path;
    }
    const ModelFile model = read_model(model_path);
    if (mc->parsed()) {
      RunConfig run = cfg ? *cfg : model.config;
      if (!output_override.empty()) run.mc_output_path = output_override;
      return cmd_mc(run, model, out);
    }
    const std::string data = !data_path.empty() ? data_path
                             : cfg             ? cfg->data_path
                                               : model.config.data_path;
    const std::string output = !output_override.empty() ? output_override
                               : cfg ? cfg->predict_output_path
                                     : model.config.predict_output_path;
    return cmd_predict(model, data, output, out, err);
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace serls::app
