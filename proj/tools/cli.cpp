#include "cli.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "benchmark.hpp"
#include "uoivar/errors.hpp"
#include "uoivar/io.hpp"
#include "uoivar/metrics.hpp"
#include "uoivar/uoi.hpp"

namespace uoivar::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

enum class Kind { integer, real, boolean, text, real_list };

struct Key {
  std::string name;
  Kind kind;
  json def;  // null marks an optional key without a default
  std::string help;
};

const char* type_label(Kind k) {
  switch (k) {
    case Kind::integer: return "INT";
    case Kind::real: return "FLOAT";
    case Kind::boolean: return "BOOL";
    case Kind::text: return "TEXT";
    case Kind::real_list: return "FLOAT,...";
  }
  return "TEXT";
}

std::optional<long long> parse_integer(const std::string& s) {
  long long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

json from_flag(const Key& key, const std::string& raw) {
  const std::string where = "--" + key.name + " " + raw;
  switch (key.kind) {
    case Kind::integer:
      if (auto v = parse_integer(raw)) return *v;
      throw ConfigError(where + ": expected an integer");
    case Kind::real:
      try {
        return parse_double(raw);
      } catch (const Error&) {
        throw ConfigError(where + ": expected a finite number");
      }
    case Kind::boolean:
      if (raw == "true" || raw == "1") return true;
      if (raw == "false" || raw == "0") return false;
      throw ConfigError(where + ": expected true or false");
    case Kind::text:
      return raw;
    case Kind::real_list: {
      json out = json::array();
      std::size_t pos = 0;
      while (pos <= raw.size()) {
        const std::size_t comma = std::min(raw.find(',', pos), raw.size());
        try {
          out.push_back(parse_double(raw.substr(pos, comma - pos)));
        } catch (const Error&) {
          throw ConfigError(where + ": expected comma-separated numbers");
        }
        pos = comma + 1;
      }
      return out;
    }
  }
  return raw;
}

void check_config_value(const Key& key, const json& v) {
  if (v.is_null() && key.def.is_null()) return;
  bool ok = false;
  switch (key.kind) {
    case Kind::integer: ok = v.is_number_integer(); break;
    case Kind::real: ok = v.is_number(); break;
    case Kind::boolean: ok = v.is_boolean(); break;
    case Kind::text: ok = v.is_string(); break;
    case Kind::real_list:
      ok = v.is_array() && std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); });
      break;
  }
  if (!ok) throw ConfigError("config key '" + key.name + "' has the wrong type");
}

/// Defaults, then an optional JSON config file, then command-line flags.
class Settings {
 public:
  Settings(CLI::App* app, std::vector<Key> keys) : keys_(std::move(keys)) {
    app->add_option("--config", config_path_, "JSON file with settings; flags take precedence");
    for (const auto& key : keys_) {
      std::string names = "--" + key.name;
      if (key.name.find('_') != std::string::npos) {
        std::string dashed = key.name;
        std::replace(dashed.begin(), dashed.end(), '_', '-');
        names += ",--" + dashed;
      }
      CLI::Option* opt = app->add_option(names, raw_[key.name], key.help);
      opt->type_name(type_label(key.kind));
      if (!key.def.is_null()) opt->default_str(key.def.is_string() ? key.def.get<std::string>() : key.def.dump());
      options_[key.name] = opt;
    }
  }

  json resolve() const {
    json out = json::object();
    for (const auto& key : keys_) out[key.name] = key.def;
    if (!config_path_.empty()) {
      json file;
      try {
        file = read_json(config_path_);
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
      if (!file.is_object()) throw ConfigError("config file must hold a JSON object");
      for (const auto& [name, value] : file.items()) {
        const Key* key = find(name);
        if (!key) throw ConfigError("unknown config key '" + name + "'");
        check_config_value(*key, value);
        out[name] = value;
      }
    }
    for (const auto& key : keys_) {
      if (options_.at(key.name)->count() > 0) out[key.name] = from_flag(key, raw_.at(key.name));
    }
    return out;
  }

 private:
  const Key* find(const std::string& name) const {
    for (const auto& key : keys_)
      if (key.name == name) return &key;
    return nullptr;
  }

  std::vector<Key> keys_;
  std::string config_path_;
  std::map<std::string, std::string> raw_;
  std::map<std::string, CLI::Option*> options_;
};

// typed accessors over a resolved settings object

long long integer(const json& c, const std::string& name, long long min_value) {
  const long long v = c.at(name).get<long long>();
  if (v < min_value) throw ConfigError(name + " must be at least " + std::to_string(min_value));
  return v;
}

double real(const json& c, const std::string& name) { return c.at(name).get<double>(); }

std::string text(const json& c, const std::string& name, bool required = false) {
  const auto& v = c.at(name);
  if (v.is_null() || (required && v.get<std::string>().empty())) throw ConfigError("--" + name + " is required");
  return v.get<std::string>();
}

std::vector<Key> process_keys() {
  return {
      {"m", Kind::integer, 10, "process dimension"},
      {"d", Kind::integer, 1, "lag order"},
      {"sparsity", Kind::real, 0.9, "fraction of zero transition entries"},
      {"nonzeros", Kind::integer, nullptr, "exact number of nonzero transition entries (overrides sparsity)"},
      {"magnitude", Kind::text, "exp_away_from_zero", "exp_away_from_zero | laplace0 | uniform_pm1"},
      {"target_rho", Kind::real, 0.8, "spectral radius after rescaling"},
      {"sigma_block_size", Kind::integer, 4, "noise covariance block size"},
      {"sigma_diag", Kind::real, 1.0, "noise variance"},
      {"sigma_offdiag", Kind::real, 0.25, "within-block noise covariance"},
  };
}

std::vector<Key> estimator_keys() {
  return {
      {"b1", Kind::integer, 20, "intersection bootstrap replicates"},
      {"b2", Kind::integer, 30, "union bootstrap replicates"},
      {"block_len", Kind::integer, 7, "moving-block length"},
      {"threshold", Kind::real, 1.0, "intersection selection frequency in (0, 1]"},
      {"fit_metric", Kind::text, "bic", "mse | bic | neg_loglik"},
      {"n_lambda", Kind::integer, 50, "regularization path length"},
      {"lambda_min_ratio", Kind::real, 1e-3, "smallest lambda relative to lambda_max"},
      {"lambda", Kind::real_list, nullptr, "explicit decreasing regularization path"},
      {"cv_folds", Kind::integer, 5, "folds for the cross-validated LASSO"},
      {"raw_series_bootstrap", Kind::boolean, false, "resample raw series blocks instead of regression rows"},
      {"max_iter", Kind::integer, 10000, "coordinate-descent sweep limit"},
      {"tol", Kind::real, 1e-7, "coordinate-descent tolerance"},
      {"penalize_intercept", Kind::boolean, false, "include intercepts in the penalty"},
      {"threads", Kind::integer, 1, "worker threads (overridden by UOIVAR_THREADS)"},
  };
}

template <class... Lists>
std::vector<Key> concat(Lists... lists) {
  std::vector<Key> out;
  (out.insert(out.end(), lists.begin(), lists.end()), ...);
  return out;
}

int resolve_threads(const json& c) {
  if (const char* env = std::getenv(kThreadsEnv); env && *env) {
    const auto v = parse_integer(env);
    if (!v || *v < 1) throw ConfigError(std::string(kThreadsEnv) + " must be a positive integer");
    return static_cast<int>(*v);
  }
  return static_cast<int>(integer(c, "threads", 1));
}

template <class F>
auto translate(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

SparseVarSpec process_spec(const json& c) {
  SparseVarSpec spec;
  spec.m = integer(c, "m", 1);
  spec.d = static_cast<int>(integer(c, "d", 1));
  spec.sparsity = real(c, "sparsity");
  if (!c.at("nonzeros").is_null()) spec.nonzeros = integer(c, "nonzeros", 0);
  spec.magnitude = translate([&] { return parse_magnitude_dist(text(c, "magnitude")); });
  spec.target_rho = real(c, "target_rho");
  spec.sigma.block_size = integer(c, "sigma_block_size", 1);
  spec.sigma.diag_value = real(c, "sigma_diag");
  spec.sigma.offdiag_value = real(c, "sigma_offdiag");
  return spec;
}

LassoOptions lasso_options(const json& c) {
  LassoOptions o;
  o.max_iter = static_cast<int>(integer(c, "max_iter", 1));
  o.tol = real(c, "tol");
  o.penalize_intercept = c.at("penalize_intercept").get<bool>();
  return o;
}

std::optional<LambdaPath> lambda_override(const json& c) {
  if (c.at("lambda").is_null()) return std::nullopt;
  return translate([&] { return LambdaPath(c.at("lambda").get<std::vector<double>>()); });
}

UoiConfig uoi_config(const json& c) {
  UoiConfig cfg;
  cfg.lambda = lambda_override(c);
  cfg.n_lambda = static_cast<int>(integer(c, "n_lambda", 1));
  cfg.lambda_min_ratio = real(c, "lambda_min_ratio");
  cfg.b1 = static_cast<int>(integer(c, "b1", 1));
  cfg.b2 = static_cast<int>(integer(c, "b2", 1));
  cfg.block_len = integer(c, "block_len", 1);
  cfg.threshold = real(c, "threshold");
  cfg.fit_metric = translate([&] { return parse_fit_metric(text(c, "fit_metric")); });
  if (c.contains("seed") && !c.at("seed").is_null()) cfg.seed = static_cast<std::uint64_t>(integer(c, "seed", 0));
  cfg.raw_series_bootstrap = c.at("raw_series_bootstrap").get<bool>();
  cfg.n_threads = resolve_threads(c);
  cfg.lasso = lasso_options(c);
  translate([&] {
    cfg.validate();
    return 0;
  });
  return cfg;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

fs::path prepare_out_dir(const json& c) {
  const fs::path dir(text(c, "out_dir", true));
  fs::create_directories(dir);
  return dir;
}

// Settings as recorded in output documents; the output location is left out so
// that reruns into different directories produce identical files.
json recorded(json c) {
  c.erase("out_dir");
  return c;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const json& c) {
  const SparseVarSpec spec = process_spec(c);
  const Index t_len = integer(c, "t_len", 1);
  const long long reps = integer(c, "reps", 1);
  const auto seed = static_cast<std::uint64_t>(integer(c, "seed", 0));
  const fs::path dir = prepare_out_dir(c);

  const RngStream root(seed);
  RngStream param_stream = root.derive(0, StreamTag::params);
  const SparseVarDraw draw = translate([&] { return random_sparse_var(spec, param_stream); });
  const int burn_in =
      c.at("burn_in").is_null() ? default_burn_in(draw.params) : static_cast<int>(integer(c, "burn_in", 0));
  write_json((dir / "params.json").string(), to_json(draw.params));

  json realizations = json::array();
  for (long long r = 0; r < reps; ++r) {
    RngStream stream = root.derive(static_cast<std::uint64_t>(r), StreamTag::series);
    const std::uint64_t stream_seed = stream.seed();
    const TimeSeries series = simulate(draw.params, t_len, burn_in, stream);
    char name[32];
    std::snprintf(name, sizeof name, "series_%04lld.csv", r);
    write_time_series((dir / name).string(), series);
    realizations.push_back({{"file", name}, {"seed", stream_seed}});
  }
  json manifest = {{"schema_version", kSchemaVersion},
                   {"kind", "simulation_manifest"},
                   {"seed", seed},
                   {"params_seed", param_stream.seed()},
                   {"burn_in", burn_in},
                   {"spectral_radius", check_stability(draw.params).spectral_radius},
                   {"target_rho_ignored", draw.target_rho_ignored},
                   {"settings", recorded(c)},
                   {"realizations", std::move(realizations)}};
  write_json((dir / "manifest.json").string(), manifest);
  return kOk;
}

std::vector<std::string> term_names(const std::vector<std::string>& labels, int d) {
  std::vector<std::string> out{"intercept"};
  for (int k = 1; k <= d; ++k)
    for (const auto& l : labels) out.push_back(l + "_lag" + std::to_string(k));
  return out;
}

void write_coefficients(const fs::path& path, const Matrix& b, const std::vector<std::string>& labels, int d) {
  CsvTable t;
  t.header.push_back("term");
  t.header.insert(t.header.end(), labels.begin(), labels.end());
  const auto terms = term_names(labels, d);
  for (Index i = 0; i < b.rows(); ++i) {
    std::vector<std::string> row{terms[static_cast<std::size_t>(i)]};
    for (Index j = 0; j < b.cols(); ++j) row.push_back(format_double(b(i, j)));
    t.rows.push_back(std::move(row));
  }
  write_csv(path.string(), t);
}

int cmd_fit(const json& c) {
  const auto start = std::chrono::steady_clock::now();
  const std::string input = text(c, "input", true);
  const int d = static_cast<int>(integer(c, "d", 1));
  const int diff_order = static_cast<int>(integer(c, "diff_order", 0));
  const std::string method = text(c, "method");
  if (method != "uoi" && method != "lasso_cv") throw ConfigError("method must be uoi or lasso_cv");
  const UoiConfig cfg = uoi_config(c);
  const int folds = static_cast<int>(integer(c, "cv_folds", 2));
  const fs::path dir = prepare_out_dir(c);

  TimeSeries series = read_time_series(input);
  if (diff_order > 0) series = difference(series, diff_order);
  require_nondegenerate(series);

  FitResult fit;
  if (method == "uoi") {
    fit = uoi_var(series, d, cfg);
  } else {
    LassoCvConfig cv;
    cv.lambda = cfg.lambda;
    cv.n_lambda = cfg.n_lambda;
    cv.lambda_min_ratio = cfg.lambda_min_ratio;
    cv.n_folds = folds;
    cv.lasso = cfg.lasso;
    fit = lasso_cv_var(series, d, cv);
  }
  json j = to_json(fit);
  j["preprocessing"] = {{"diff_order", diff_order}, {"input", input}};
  j["timing"] = {{"elapsed_seconds", seconds_since(start)}, {"threads", cfg.n_threads}};
  write_json((dir / "fit.json").string(), j);
  write_coefficients(dir / "coefficients.csv", fit.b_hat, fit.labels, fit.d);
  return kOk;
}

struct Model {
  Matrix b;
  int d = 1;
  std::vector<std::string> labels;
  int diff_order = 0;
};

Model load_model(const std::string& path) {
  const json j = read_json(path);
  const std::string kind = j.is_object() && j.contains("kind") && j["kind"].is_string() ? j["kind"].get<std::string>() : "";
  Model model;
  if (kind == "fit_result") {
    const FitResult fit = fit_result_from_json(j);
    model.b = fit.b_hat;
    model.d = fit.d;
    model.labels = fit.labels;
    if (j.contains("preprocessing")) model.diff_order = j["preprocessing"].value("diff_order", 0);
  } else if (kind == "var_params") {
    const VarParams params = var_params_from_json(j);
    model.b = params.coefficients();
    model.d = params.d();
  } else {
    throw DataError("'" + path + "' is neither a fit result nor a VAR parameter document");
  }
  return model;
}

int cmd_forecast(const json& c) {
  const Model model = load_model(text(c, "model", true));
  TimeSeries series = read_time_series(text(c, "input", true));
  const int diff_order =
      c.at("diff_order").is_null() ? model.diff_order : static_cast<int>(integer(c, "diff_order", 0));
  const fs::path dir = prepare_out_dir(c);
  if (diff_order > 0) series = difference(series, diff_order);
  const Index m = model.b.cols();
  if (series.dim() != m) {
    throw DataError("series has " + std::to_string(series.dim()) + " columns but the model expects " + std::to_string(m));
  }
  const TimeSeries predicted = forecast_one_step(series, model.b, model.d);
  const TimeSeries actual(series.data().bottomRows(predicted.rows()), series.labels());
  const ForecastError err = rmse_forecast(actual, predicted);

  CsvTable table;
  table.header.push_back("t");
  table.header.insert(table.header.end(), series.labels().begin(), series.labels().end());
  for (Index r = 0; r < predicted.rows(); ++r) {
    std::vector<std::string> row{std::to_string(r + model.d)};
    for (Index j = 0; j < m; ++j) row.push_back(format_double(predicted.data()(r, j)));
    table.rows.push_back(std::move(row));
  }
  write_csv((dir / "forecasts.csv").string(), table);

  CsvTable comps{{"component", "label", "rmse"}, {}};
  for (Index j = 0; j < m; ++j) {
    comps.rows.push_back({std::to_string(j), series.labels()[static_cast<std::size_t>(j)],
                          format_double(err.per_component[static_cast<std::size_t>(j)])});
  }
  write_csv((dir / "rmse_components.csv").string(), comps);

  write_json((dir / "summary.json").string(), {{"schema_version", kSchemaVersion},
                                                {"kind", "forecast_summary"},
                                                {"overall_rmse", err.overall},
                                                {"mean_raw_error", err.mean_raw_error},
                                                {"n_forecasts", predicted.rows()},
                                                {"d", model.d},
                                                {"m", m},
                                                {"diff_order", diff_order}});
  return kOk;
}

int cmd_graph(const json& c) {
  const Model model = load_model(text(c, "model", true));
  const double tol = real(c, "tol");
  if (!(tol >= 0.0)) throw ConfigError("tol must be non-negative");
  const fs::path dir = prepare_out_dir(c);
  const GrangerGraph g = granger_graph(model.b, model.d, model.b.cols(), tol, model.labels);
  write_text((dir / "graph.dot").string(), to_dot(g));

  CsvTable edges{{"source", "target", "max_abs_coef"}, {}};
  for (const auto& e : g.edges) {
    edges.rows.push_back({std::to_string(e.source), std::to_string(e.target), format_double(e.max_abs_coef)});
  }
  write_csv((dir / "edges.csv").string(), edges);

  CsvTable degrees{{"node", "label", "in_degree", "out_degree"}, {}};
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    degrees.rows.push_back(
        {std::to_string(i), g.nodes[i], std::to_string(g.in_degree[i]), std::to_string(g.out_degree[i])});
  }
  write_csv((dir / "degrees.csv").string(), degrees);
  return kOk;
}

int cmd_benchmark(const json& c) {
  const auto start = std::chrono::steady_clock::now();
  if (c.at("seed").is_null()) throw ConfigError("--seed is required for benchmark runs");
  BenchmarkSettings s;
  s.process = process_spec(c);
  s.t_len = integer(c, "t_len", 1);
  s.reps = static_cast<int>(integer(c, "reps", 1));
  s.seed = static_cast<std::uint64_t>(integer(c, "seed", 0));
  s.uoi = uoi_config(c);
  s.cv_folds = static_cast<int>(integer(c, "cv_folds", 2));
  s.threads = s.uoi.n_threads;
  s.bins = static_cast<int>(integer(c, "bins", 1));
  const fs::path dir = prepare_out_dir(c);

  const BenchmarkReport report = translate([&] { return run_benchmark(s); });
  write_benchmark(dir.string(), s, report);
  write_json((dir / "run.json").string(), {{"schema_version", kSchemaVersion},
                                            {"kind", "benchmark_run"},
                                            {"settings", recorded(c)},
                                            {"timing", {{"elapsed_seconds", seconds_since(start)}, {"threads", s.threads}}}});
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Sparse VAR estimation by bootstrap selection and bagged estimation"};
  app.require_subcommand(1);

  struct Command {
    CLI::App* app;
    std::unique_ptr<Settings> settings;
    int (*fn)(const json&);
  };
  std::vector<Command> commands;
  auto add = [&](const char* name, const char* help, std::vector<Key> keys, int (*fn)(const json&)) {
    CLI::App* sub = app.add_subcommand(name, help);
    commands.push_back({sub, std::make_unique<Settings>(sub, std::move(keys)), fn});
  };

  add("simulate", "draw a sparse stable VAR and simulate realizations",
      concat(process_keys(), std::vector<Key>{{"t_len", Kind::integer, 100, "series length T (T+1 rows)"},
                                              {"burn_in", Kind::integer, nullptr, "discarded warm-up steps"},
                                              {"reps", Kind::integer, 1, "number of realizations"},
                                              {"seed", Kind::integer, 0, "random seed"},
                                              {"out_dir", Kind::text, "", "output directory"}}),
      cmd_simulate);
  add("fit", "estimate a sparse VAR from a CSV series",
      concat(estimator_keys(), std::vector<Key>{{"input", Kind::text, "", "input CSV"},
                                                {"d", Kind::integer, 1, "lag order"},
                                                {"diff_order", Kind::integer, 0, "difference the series first"},
                                                {"method", Kind::text, "uoi", "uoi | lasso_cv"},
                                                {"seed", Kind::integer, 0, "random seed"},
                                                {"out_dir", Kind::text, "", "output directory"}}),
      cmd_fit);
  add("forecast", "one-step-ahead forecasts and RMSE",
      {{"model", Kind::text, "", "fit result or VAR parameter JSON"},
       {"input", Kind::text, "", "input CSV"},
       {"diff_order", Kind::integer, nullptr, "difference the series first (default: as fitted)"},
       {"out_dir", Kind::text, "", "output directory"}},
      cmd_forecast);
  add("graph", "Granger-causal network of a fitted model",
      {{"model", Kind::text, "", "fit result or VAR parameter JSON"},
       {"tol", Kind::real, 0.0, "edge threshold on |coefficient|"},
       {"out_dir", Kind::text, "", "output directory"}},
      cmd_graph);
  add("benchmark", "compare the estimator against cross-validated LASSO on simulated data",
      concat(process_keys(), estimator_keys(),
             std::vector<Key>{{"t_len", Kind::integer, 200, "series length T"},
                              {"reps", Kind::integer, 20, "number of realizations"},
                              {"seed", Kind::integer, nullptr, "random seed (required)"},
                              {"bins", Kind::integer, 40, "histogram bins"},
                              {"out_dir", Kind::text, "", "output directory"}}),
      cmd_benchmark);

  std::vector<const char*> argv{"uoivar"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    for (auto& cmd : commands) {
      if (cmd.app->parsed()) return cmd.fn(cmd.settings->resolve());
    }
    return kConfigError;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace uoivar::cli
