#include "uoivar/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "uoivar/errors.hpp"

namespace uoivar {

using nlohmann::json;

// ---------------------------------------------------------------------------
// CSV

CsvTable parse_csv(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);

  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, field_started = false;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && !field_started) {
      quoted = field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_record();
    } else if (c == '\r') {
      continue;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw DataError("CSV ends inside a quoted field");
  if (!field.empty() || !record.empty()) end_record();
  if (records.empty()) throw DataError("CSV has no header row");

  CsvTable table;
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw DataError("CSV row " + std::to_string(r + 1) + " has " + std::to_string(records[r].size()) +
                      " cells, expected " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return parse_csv(in);
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_record(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << csv_field(cells[i]);
  out << '\n';
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

}  // namespace

void write_csv(std::ostream& out, const CsvTable& table) {
  write_record(out, table.header);
  for (const auto& row : table.rows) write_record(out, row);
}

void write_csv(const std::string& path, const CsvTable& table) {
  auto out = open_out(path);
  write_csv(out, table);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (text.empty() || res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
    throw DataError("'" + text + "' is not a finite number");
  }
  return v;
}

TimeSeries to_time_series(const CsvTable& table) {
  if (table.header.empty()) throw DataError("CSV has no columns");
  if (table.rows.empty()) throw DataError("CSV has no data rows");
  Matrix data(static_cast<Index>(table.rows.size()), static_cast<Index>(table.header.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      try {
        data(static_cast<Index>(r), static_cast<Index>(c)) = parse_double(table.rows[r][c]);
      } catch (const DataError& e) {
        throw DataError("row " + std::to_string(r + 2) + ", column '" + table.header[c] + "': " + e.what());
      }
    }
  }
  return TimeSeries(std::move(data), table.header);
}

CsvTable matrix_table(const Matrix& x, std::vector<std::string> header) {
  if (static_cast<Index>(header.size()) != x.cols()) throw InvalidArgument("header does not match column count");
  CsvTable t;
  t.header = std::move(header);
  for (Index r = 0; r < x.rows(); ++r) {
    std::vector<std::string> row;
    for (Index c = 0; c < x.cols(); ++c) row.push_back(format_double(x(r, c)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable to_csv(const TimeSeries& series) { return matrix_table(series.data(), series.labels()); }

TimeSeries read_time_series(const std::string& path) { return to_time_series(read_csv(path)); }

void write_time_series(const std::string& path, const TimeSeries& series) { write_csv(path, to_csv(series)); }

// ---------------------------------------------------------------------------
// JSON

json to_json(const Matrix& x) {
  json rows = json::array();
  for (Index r = 0; r < x.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < x.cols(); ++c) row.push_back(x(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw DataError("expected a non-empty nested array matrix");
  const auto rows = static_cast<Index>(j.size());
  const auto cols = static_cast<Index>(j[0].size());
  Matrix x(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) throw DataError("ragged matrix in JSON");
    for (Index c = 0; c < cols; ++c) {
      const auto& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw DataError("non-numeric matrix entry in JSON");
      x(r, c) = v.get<double>();
    }
  }
  return x;
}

json to_json(const VarParams& params) {
  json a = json::array();
  for (const auto& ad : params.a()) a.push_back(to_json(ad));
  return {{"schema_version", kSchemaVersion},
          {"kind", "var_params"},
          {"m", params.m()},
          {"d", params.d()},
          {"nu", std::vector<double>(params.nu().data(), params.nu().data() + params.nu().size())},
          {"a", std::move(a)},
          {"sigma", to_json(params.sigma())}};
}

VarParams var_params_from_json(const json& j) {
  try {
    const auto nu_values = j.at("nu").get<std::vector<double>>();
    const Vector nu = Eigen::Map<const Vector>(nu_values.data(), static_cast<Index>(nu_values.size()));
    std::vector<Matrix> a;
    for (const auto& ad : j.at("a")) a.push_back(matrix_from_json(ad));
    return VarParams(nu, std::move(a), matrix_from_json(j.at("sigma")));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed VAR parameter document: ") + e.what());
  }
}

namespace {

json support_json(const Support& s) {
  json out = json::array();
  for (const auto& [i, j] : s.entries()) out.push_back({i, j});
  return out;
}

json config_json(const FitResult& fit) {
  const auto& c = fit.config;
  json lasso = {{"max_iter", c.lasso.max_iter}, {"tol", c.lasso.tol}, {"penalize_intercept", c.lasso.penalize_intercept}};
  if (fit.method == "lasso_cv") return {{"cv_folds", fit.cv_folds}, {"lasso", std::move(lasso)}};
  return {{"b1", c.b1},
          {"b2", c.b2},
          {"block_len", c.block_len},
          {"threshold", c.threshold},
          {"fit_metric", to_string(c.fit_metric)},
          {"seed", c.seed},
          {"raw_series_bootstrap", c.raw_series_bootstrap},
          {"lasso", std::move(lasso)}};
}

}  // namespace

json to_json(const FitResult& fit) {
  const auto& d = fit.diagnostics;
  json supports = json::array();
  for (const auto& s : fit.supports) supports.push_back(support_json(s));
  json diagnostics = {{"r2", d.r2},
                      {"bic", d.bic},
                      {"sparsity_fraction", d.sparsity_fraction},
                      {"n_star", d.n_star},
                      {"n_star_unsupported", d.n_star_unsupported},
                      {"per_bootstrap_fit_scores", d.per_bootstrap_fit_scores},
                      {"b1_used", d.b1_used},
                      {"b1_dropped", d.b1_dropped},
                      {"b2_used", d.b2_used},
                      {"b2_dropped", d.b2_dropped},
                      {"rank_deficient_fits", d.rank_deficient_fits},
                      {"ridge_regularized_scores", d.ridge_regularized_scores},
                      {"nonzero_transition_entries",
                       (fit.b_hat.bottomRows(fit.b_hat.rows() - 1).array() != 0.0).count()},
                      {"warnings", d.warnings}};
  return {{"schema_version", kSchemaVersion},
          {"kind", "fit_result"},
          {"method", fit.method},
          {"d", fit.d},
          {"m", fit.m},
          {"labels", fit.labels},
          {"config", config_json(fit)},
          {"lambda", fit.lambda.values()},
          {"b_hat", to_json(fit.b_hat)},
          {"sigma_hat", to_json(fit.sigma_hat)},
          {"supports", std::move(supports)},
          {"chosen_k_histogram", fit.chosen_k_histogram},
          {"diagnostics", std::move(diagnostics)}};
}

FitResult fit_result_from_json(const json& j) {
  try {
    if (j.at("kind").get<std::string>() != "fit_result") throw DataError("document is not a fit result");
    FitResult fit;
    fit.method = j.at("method").get<std::string>();
    fit.d = j.at("d").get<int>();
    fit.m = j.at("m").get<Index>();
    fit.labels = j.at("labels").get<std::vector<std::string>>();
    const auto lambda = j.at("lambda").get<std::vector<double>>();
    if (!lambda.empty()) fit.lambda = LambdaPath(lambda);
    fit.b_hat = matrix_from_json(j.at("b_hat"));
    fit.sigma_hat = matrix_from_json(j.at("sigma_hat"));
    if (fit.b_hat.rows() != fit.d * fit.m + 1 || fit.b_hat.cols() != fit.m) {
      throw DataError("b_hat shape does not match d and m");
    }
    for (const auto& s : j.at("supports")) {
      Support sup(fit.b_hat.rows(), fit.b_hat.cols());
      for (const auto& e : s) sup.insert(e.at(0).get<Index>(), e.at(1).get<Index>());
      fit.supports.push_back(std::move(sup));
    }
    fit.chosen_k_histogram = j.at("chosen_k_histogram").get<std::vector<int>>();
    const auto& d = j.at("diagnostics");
    auto num = [](const json& v) { return v.is_null() ? std::nan("") : v.get<double>(); };
    auto& diag = fit.diagnostics;
    diag.r2 = num(d.at("r2"));
    diag.bic = num(d.at("bic"));
    diag.sparsity_fraction = num(d.at("sparsity_fraction"));
    diag.n_star = d.at("n_star").get<Index>();
    diag.per_bootstrap_fit_scores = d.at("per_bootstrap_fit_scores").get<std::vector<double>>();
    diag.b1_used = d.at("b1_used").get<int>();
    diag.b2_used = d.at("b2_used").get<int>();
    diag.warnings = d.at("warnings").get<std::vector<std::string>>();
    return fit;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed fit result document: ") + e.what());
  }
}

json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json(const std::string& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_text(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

}  // namespace uoivar
