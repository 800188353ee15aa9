#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "uoivar/errors.hpp"
#include "uoivar/io.hpp"

using namespace uoivar;

namespace {

CsvTable parse(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in);
}

}  // namespace

TEST_CASE("csv parsing") {
  const CsvTable t = parse("a,\"b,c\",d\r\n1,\"say \"\"hi\"\"\",3\n");
  REQUIRE(t.header.size() == 3);
  CHECK(t.header[1] == "b,c");
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0][1] == "say \"hi\"");

  CHECK(parse("\xEF\xBB\xBFx\n1\n").header[0] == "x");
  CHECK(parse("x,y\n1,2").rows.size() == 1);
  CHECK_THROWS_AS(parse("x,y\n1\n"), DataError);
  CHECK_THROWS_AS(parse(""), DataError);
  CHECK_THROWS_AS(parse("x\n\"open\n"), DataError);
}

TEST_CASE("numeric cells") {
  CHECK(parse_double("1.5") == 1.5);
  CHECK(parse_double("-2e-3") == -0.002);
  CHECK_THROWS_AS(parse_double(""), DataError);
  CHECK_THROWS_AS(parse_double("nan"), DataError);
  CHECK_THROWS_AS(parse_double("inf"), DataError);
  CHECK_THROWS_AS(parse_double("1.0x"), DataError);
  CHECK_THROWS_AS(parse_double("1,5"), DataError);
  for (double v : {0.1, 1.0 / 3.0, -1e-300, 6.02214076e23}) CHECK(parse_double(format_double(v)) == v);
}

TEST_CASE("time series csv") {
  const TimeSeries x = to_time_series(parse("p,q\n1,2\n3,4.5\n"));
  CHECK(x.labels() == std::vector<std::string>{"p", "q"});
  CHECK(x.data()(1, 1) == 4.5);
  CHECK_THROWS_AS(to_time_series(parse("p,q\n1,\n")), DataError);
  CHECK_THROWS_AS(to_time_series(parse("p,q\n1,NaN\n")), DataError);
  CHECK_THROWS_AS(to_time_series(parse("p,q\n")), DataError);
}

TEST_CASE("time series files round trip exactly") {
  const auto dir = oracle::scratch_dir("io_series");
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  Matrix m(20, 3);
  for (Index i = 0; i < m.size(); ++i) m(i) = z(rng) * 1e3;
  const TimeSeries x(m, {"a", "b,c", "d\"e"});
  const std::string path = (dir / "s.csv").string();
  write_time_series(path, x);
  const TimeSeries back = read_time_series(path);
  CHECK(back.data() == x.data());
  CHECK(back.labels() == x.labels());
  CHECK_THROWS_AS(read_time_series((dir / "missing.csv").string()), DataError);
}

TEST_CASE("parameter documents round trip") {
  Matrix a(2, 2);
  a << 0.1, -0.2, 0.0, 0.3;
  Vector nu(2);
  nu << 1.0, 2.0;
  const VarParams p(nu, {a, 0.5 * a}, Matrix::Identity(2, 2));
  const VarParams back = var_params_from_json(to_json(p));
  CHECK(back.coefficients() == p.coefficients());
  CHECK(back.sigma() == p.sigma());
  CHECK_THROWS_AS(var_params_from_json(nlohmann::json::object()), DataError);
}

TEST_CASE("fit result documents round trip") {
  FitResult fit;
  fit.d = 1;
  fit.m = 2;
  fit.labels = {"a", "b"};
  fit.lambda = LambdaPath({1.0, 0.1});
  fit.b_hat = Matrix::Zero(3, 2);
  fit.b_hat(0, 0) = 0.5;
  fit.b_hat(2, 1) = -0.25;
  fit.sigma_hat = Matrix::Identity(2, 2);
  fit.supports = {Support::intercepts(3, 2), Support::of(fit.b_hat).with_intercepts()};
  fit.chosen_k_histogram = {3, 7};
  fit.diagnostics.r2 = std::nan("");
  fit.diagnostics.bic = -4.0;
  fit.diagnostics.per_bootstrap_fit_scores = {1.0, 2.0};

  const nlohmann::json j = to_json(fit);
  CHECK(j["schema_version"] == kSchemaVersion);
  CHECK(j["diagnostics"]["nonzero_transition_entries"] == 1);
  const FitResult back = fit_result_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.b_hat == fit.b_hat);
  CHECK(back.supports == fit.supports);
  CHECK(back.chosen_k_histogram == fit.chosen_k_histogram);
  CHECK(back.lambda.values() == fit.lambda.values());
  CHECK(std::isnan(back.diagnostics.r2));
  CHECK(back.diagnostics.bic == -4.0);

  nlohmann::json bad = j;
  bad["kind"] = "var_params";
  CHECK_THROWS_AS(fit_result_from_json(bad), DataError);
  bad = j;
  bad["d"] = 2;
  CHECK_THROWS_AS(fit_result_from_json(bad), DataError);
}

TEST_CASE("matrix json rejects ragged rows") {
  CHECK_THROWS_AS(matrix_from_json(nlohmann::json::parse("[[1,2],[3]]")), DataError);
  CHECK(matrix_from_json(to_json(Matrix::Identity(3, 3))) == Matrix::Identity(3, 3));
}
