#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "uoivar/uoi.hpp"
#include "uoivar/varcore.hpp"

namespace uoivar {

inline constexpr int kSchemaVersion = 1;

/// A CSV document: one header row plus string cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable parse_csv(std::istream& in);
CsvTable read_csv(const std::string& path);
void write_csv(std::ostream& out, const CsvTable& table);
void write_csv(const std::string& path, const CsvTable& table);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);
double parse_double(const std::string& text);

/// Numeric view of a CSV table; empty, NaN and infinite cells are rejected.
TimeSeries to_time_series(const CsvTable& table);
CsvTable to_csv(const TimeSeries& series);
TimeSeries read_time_series(const std::string& path);
void write_time_series(const std::string& path, const TimeSeries& series);

CsvTable matrix_table(const Matrix& x, std::vector<std::string> header);

nlohmann::json to_json(const Matrix& x);
Matrix matrix_from_json(const nlohmann::json& j);

nlohmann::json to_json(const VarParams& params);
VarParams var_params_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FitResult& fit);
FitResult fit_result_from_json(const nlohmann::json& j);

nlohmann::json read_json(const std::string& path);
void write_json(const std::string& path, const nlohmann::json& j);
void write_text(const std::string& path, const std::string& text);

}  // namespace uoivar
