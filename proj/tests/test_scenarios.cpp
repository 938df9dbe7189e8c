#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>
#include <sstream>

#include "ngeo/error.hpp"
#include "ngeo/scenarios.hpp"

using namespace ngeo;
using std::numbers::pi;

namespace {

const Assertion& find(const ScenarioReport& r, const std::string& name) {
  for (const auto& a : r.assertions)
    if (a.name == name) return a;
  FAIL("missing assertion " << name);
  throw;
}

double cell(const Cell& c) { return std::get<double>(c); }

}  // namespace

TEST_CASE("assertion comparisons") {
  CHECK(make_assertion("a", 1.0 + 1e-9, 1.0, 1e-8, "rel", "closed-form").pass);
  CHECK_FALSE(make_assertion("a", 1.1, 1.0, 1e-8, "rel", "closed-form").pass);
  CHECK(make_assertion("a", 0.5, 0.6, 0.2, "abs", "regression").pass);
  CHECK(make_assertion("a", 2.0, 2.0, 0, "le", "published-bound").pass);
  CHECK_FALSE(make_assertion("a", 2.0, 2.0, 0, "lt", "published-bound").pass);
  CHECK(make_assertion("a", 2.0, 2.0, 0, "ge", "published-bound").pass);
  CHECK_FALSE(make_assertion("a", 2.0, 3.0, 0, "eq", "cross-check").pass);
  CHECK_FALSE(make_assertion("a", std::nan(""), 3.0, 0, "eq", "cross-check").pass);
  CHECK_THROWS_AS(make_assertion("a", 1, 1, 0, "approx", "x"), ParameterError);
}

TEST_CASE("Willmore sweep") {
  WillmoreSweepOptions opt;
  opt.eps = {0.0, 0.5, 0.8};
  opt.grid = 64;
  opt.h_samples = 20;
  const ScenarioReport r = willmore_sweep(opt);
  CHECK(r.all_pass());
  REQUIRE(r.table.rows.size() == 3);
  CHECK(r.table.columns == std::vector<std::string>{"eps", "W_quadrature", "W_closed_form", "maxH", "area", "verdict"});
  CHECK(cell(r.table.rows[0][1]) == doctest::Approx(2 * pi * pi).epsilon(1e-12));
  CHECK(std::abs(cell(r.table.rows[0][1]) - 19.7392088) < 1e-7);
  CHECK(cell(r.table.rows[2][1]) == doctest::Approx(1.2 * pi * pi).epsilon(1e-12));
  CHECK(cell(r.table.rows[1][3]) < 1e-10);
  CHECK(find(r, "W_equals_2pi2[0]").pass);
  CHECK(find(r, "W_below_2pi2[0.80000000000000004]").value < 2 * pi * pi);
  for (const auto& a : r.assertions) CHECK(!a.provenance.empty());

  opt.eps = {1.5};
  try {
    willmore_sweep(opt);
    FAIL("expected ParameterError");
  } catch (const ParameterError& e) {
    CHECK(std::string(e.what()).find("[0,1)") != std::string::npos);
  }
  opt.eps = {};
  CHECK_THROWS_AS(willmore_sweep(opt), ParameterError);
}

TEST_CASE("distance bound check") {
  const ScenarioReport r = distance_bound_check();
  CHECK(r.all_pass());
  REQUIRE(r.table.rows.size() == 3);
  // eps = 0.2 row.
  const auto& row = r.table.rows[1];
  CHECK(cell(row[0]) == 0.2);
  CHECK(cell(row[2]) == doctest::Approx(1.2633093633).epsilon(1e-9));
  CHECK(cell(row[1]) < cell(row[2]));
  CHECK(cell(row[3]) == doctest::Approx(2 * std::sqrt(0.96) * pi * pi).epsilon(1e-10));
  const Assertion& slope = find(r, "distance_loglog_slope");
  CHECK(std::abs(slope.value - 3.0) <= 0.2);

  DistanceCheckOptions two;
  two.eps = {0.2, 0.1};
  const ScenarioReport s = distance_bound_check(two);
  CHECK(s.all_pass());
  CHECK(s.notes.front().find("skipped") != std::string::npos);
}

TEST_CASE("Caratheodory suite") {
  CaratheodoryOptions opt;
  opt.grid = 128;
  const ScenarioReport r = caratheodory_suite(opt);
  CHECK(r.all_pass());
  REQUIRE(r.table.rows.size() == 3);
  CHECK(std::get<std::string>(r.table.rows[0][1]) == "isolated-umbilics");
  CHECK(cell(r.table.rows[0][2]) == 4);
  CHECK(cell(r.table.rows[0][3]) == 2);
  CHECK(cell(r.table.rows[0][5]) == 4);
  CHECK(std::get<std::string>(r.table.rows[1][1]) == "umbilic-locus");
  CHECK(std::get<std::string>(r.table.rows[2][1]) == "umbilic-free");
  CHECK(cell(r.table.rows[2][2]) == 0);
  CHECK(cell(r.table.rows[2][3]) == 0);
  CHECK(find(r, "ellipsoid:mu_loop_empty").value == 0);
  CHECK(find(r, "ellipsoid:mu_loop_point_0").value == 2);
  CHECK(find(r, "ellipsoid:mu_loop_pair_0_1").value == 4);
  CHECK(find(r, "ellipsoid:complex_point_umbilic_separation_cells").pass);
}

TEST_CASE("report writers are deterministic and versioned") {
  WillmoreSweepOptions opt;
  opt.eps = {0.3};
  opt.grid = 32;
  opt.h_samples = 8;
  const ScenarioReport a = willmore_sweep(opt), b = willmore_sweep(opt);
  std::ostringstream ja, jb;
  write_report_json(ja, {a}, false);
  write_report_json(jb, {b}, false);
  CHECK(ja.str() == jb.str());
  const auto doc = nlohmann::json::parse(ja.str());
  CHECK(doc["schema_version"] == kReportSchemaVersion);
  CHECK_FALSE(doc.contains("generated"));
  CHECK(doc["pass"] == true);
  const auto& s = doc["scenarios"][0];
  CHECK(s["id"] == "willmore-sweep");
  CHECK_FALSE(s.contains("runtime_seconds"));
  CHECK(s["rows"][0][1].get<double>() == std::get<double>(a.table.rows[0][1]));
  CHECK(s["assertions"][0]["tolerance"].get<double>() == 1e-8);
  CHECK(s["assertions"][0]["provenance"] == "closed-form");

  std::ostringstream jt;
  write_report_json(jt, {a}, true);
  const auto dt = nlohmann::json::parse(jt.str());
  CHECK(dt.contains("generated"));
  CHECK(dt["scenarios"][0].contains("runtime_seconds"));

  std::ostringstream csv;
  write_report_csv(csv, {a});
  const std::string text = csv.str();
  CHECK(text.rfind("scenario,assertion,value,reference,tolerance,comparison,provenance,pass\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + static_cast<long>(a.assertions.size()));

  std::ostringstream tab;
  write_table_csv(tab, a.table);
  std::istringstream in(tab.str());
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  CHECK(header == "eps,W_quadrature,W_closed_form,maxH,area,verdict");
  const std::string w = line.substr(line.find(',') + 1, line.find(',', line.find(',') + 1) - line.find(',') - 1);
  CHECK(std::stod(w) == std::get<double>(a.table.rows[0][1]));
}
