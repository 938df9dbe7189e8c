// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria, capped at 1.

#include <fmt/core.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "ngeo/chart_tensor.hpp"
#include "ngeo/line_space.hpp"
#include "ngeo/scenarios.hpp"
#include "ngeo/surface_geom.hpp"
#include "ngeo/umbilic_topology.hpp"
#include "oracles.hpp"

using namespace ngeo;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool passes(const ScenarioReport& r, const std::string& prefix) {
  bool ok = false;
  for (const auto& a : r.assertions)
    if (a.name.rfind(prefix, 0) == 0) {
      if (!a.pass) return false;
      ok = true;
    }
  return ok;
}

Outcome willmore() {
  const auto t0 = std::chrono::steady_clock::now();
  const ScenarioReport r = willmore_sweep();
  const double secs = seconds_since(t0);
  double w0 = 0.0;
  std::size_t rows = 0;
  for (const auto& row : r.table.rows)
    if (std::get<double>(row[0]) == 0.0) w0 = std::get<double>(row[1]);
  rows = r.table.rows.size();
  const bool ok = passes(r, "W_matches_closed_form") && passes(r, "W_below_2pi2") &&
                  passes(r, "W_equals_2pi2") && std::abs(w0 - 19.7392088) < 1e-7 && rows == 10 && secs < 10.0;
  return {ok, fmt::format("10 eps values, rel 1e-8, W(0) = {:.10f}, {:.2f} s", w0, secs)};
}

Outcome minimality() {
  double worst = 0.0;
  for (double eps : {0.0, 0.2, 0.4, 0.6, 0.8}) {
    const MetricField g = hopf_eps(eps);
    const SurfaceImmersion torus = clifford_torus();
    for (int i = 0; i < 100; ++i)
      for (int j = 0; j < 100; ++j) {
        const auto c = curvatures(torus, g, 2 * pi * (i + 0.37) / 100, 2 * pi * (j + 0.61) / 100);
        worst = std::max({worst, std::abs(c.trace), std::abs(c.mean)});
      }
  }
  return {worst < 1e-10, fmt::format("max|H| = {:.3e} over 10^4 samples x 5 eps", worst)};
}

Outcome distance() {
  const ScenarioReport r = distance_bound_check();
  double worst_ratio = 0.0, worst_dw = 0.0;
  for (const auto& row : r.table.rows) {
    worst_ratio = std::max(worst_ratio, std::get<double>(row[1]) / std::get<double>(row[2]));
    worst_dw = std::max(worst_dw, std::abs(std::get<double>(row[3]) - std::get<double>(row[4])));
  }
  const bool ok = passes(r, "distance_within_bound") && passes(r, "W_unchanged_by_bump") && r.table.rows.size() == 3;
  return {ok, fmt::format("max distance/bound = {:.3f}, max |dW| = {:.1e}", worst_ratio, worst_dw)};
}

Outcome umbilics() {
  ScanOptions so;
  so.ns = so.nt = 256;
  const SurfaceImmersion ell = ellipsoid(2, 1.5, 1);
  const ScanResult scan = umbilic_scan(ell, flat_r3(), so);
  bool ok = scan.records.size() == 4;
  double sum = 0.0;
  bool doubling = true;
  for (const auto& rec : scan.records) {
    ok = ok && rec.isolated;
    const double i1 = umbilic_index(ell, flat_r3(), rec, 4 * scan.cell, scan.tolerance);
    const double i2 = umbilic_index(ell, flat_r3(), rec, 8 * scan.cell, scan.tolerance);
    ok = ok && i1 == 0.5;
    doubling = doubling && i1 == i2;
    sum += i1;
  }
  ok = ok && doubling && sum == 2.0 && euler_characteristic(ell) == 2;
  const SurfaceImmersion torus = torus_of_revolution(2, 1);
  const ScanResult ts = umbilic_scan(torus, flat_r3(), so);
  ok = ok && ts.records.empty() && euler_characteristic(torus) == 0;
  return {ok, fmt::format("ellipsoid {} umbilics, index sum {}, doubling {}; torus {} umbilics", scan.records.size(),
                          sum, doubling ? "stable" : "changed", ts.records.size())};
}

Outcome linespace() {
  const ScenarioReport r = linespace_audit();
  int failed = 0;
  for (const auto& a : r.assertions) failed += !a.pass;
  return {r.all_pass() && r.assertions.size() >= 7,
          fmt::format("{} assertions at grid 512, 1000 samples, {} failed", r.assertions.size(), failed)};
}

Outcome maslov() {
  const ScenarioReport r = maslov_suite();
  std::multiset<double> mus;
  for (const auto& a : r.assertions) mus.insert(a.value);
  const bool ok = r.all_pass() && mus == std::multiset<double>{0.0, 2.0, 4.0};
  std::string list;
  for (double m : mus) list += fmt::format("{}{}", list.empty() ? "" : ",", m);
  return {ok, fmt::format("mu = {} against 4 x principal winding", list)};
}

Outcome symplectic() {
  std::mt19937_64 gen(2024);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const SymplecticArea a = symplectic_area(fixture::random_disc(gen));
    worst = std::max(worst, std::abs(a.two_form - a.boundary));
  }
  const LineSection sec = normal_congruence(ellipsoid(2, 1.5, 1));
  std::uniform_real_distribution<double> s(0.6, pi - 0.6), t(0.0, 2 * pi);
  double lag = 0.0;
  for (int k = 0; k < 10; ++k)
    lag = std::max(lag, std::abs(symplectic_area(disc_in_section(sec, {s(gen), t(gen)}, 0.4)).two_form));
  return {worst < 1e-8 && lag < 1e-8,
          fmt::format("Stokes defect {:.2e} on 100 discs, Lagrangian area {:.2e}", worst, lag)};
}

Outcome flow() {
  const auto t0 = std::chrono::steady_clock::now();
  const FlowCheck fc = flow_check();
  const double secs = seconds_since(t0);
  const int steps = fc.run.state.history.empty() ? 0 : fc.run.state.history.back().step;
  const bool ok = fc.report.all_pass() && steps >= 500 && secs < 120.0;
  std::string detail = fmt::format("{} steps, {:.1f} s", steps, secs);
  for (const auto& a : fc.report.assertions) detail += fmt::format(", {} {:.3g}", a.name, a.value);
  return {ok, detail};
}

Outcome oracles() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int bad = 0, compared = 0;
  const std::vector<MetricField> metrics{round_s3(), hopf_eps(0.6), hopf_eps_bumped(0.4)};
  for (int n = 0; n < 1000; ++n) {
    const MetricField& m = metrics[n % metrics.size()];
    const Vec3<double> p = fixture::random_hopf_point(rng);
    const auto exact = christoffel(m, {p});
    const auto fd = oracle::fd_christoffel(m, p);
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j, ++compared) bad += !oracle::close_rel(exact[k][i][j], fd[k][i][j], 1e-6);
  }
  struct Case {
    SurfaceImmersion s;
    MetricField m;
  };
  const std::vector<Case> cases{{ellipsoid(2, 1.5, 1), flat_r3()},
                                {torus_of_revolution(2, 1), flat_r3()},
                                {fixture::wavy_hopf_torus(), hopf_eps_bumped(0.6)},
                                {clifford_torus(), hopf_eps(0.4)}};
  for (int n = 0; n < 1000; ++n) {
    const Case& c = cases[n % cases.size()];
    const ParamDomain d = c.s.domain();
    const double s = d.s0 + (0.05 + 0.9 * u(rng)) * d.length_s();
    const double t = d.t0 + (0.05 + 0.9 * u(rng)) * d.length_t();
    const CurvatureReport rep = fundamental_forms(c.s, c.m, s, t);
    const oracle::FdForms f = oracle::fd_fundamental_forms(c.s, c.m, s, t);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        bad += !oracle::close_rel(rep.first[a][b], f.first[a][b], 1e-6);
        bad += !oracle::close_rel(rep.second[a][b], f.second[a][b], 1e-6);
        compared += 2;
      }
  }
  return {bad == 0, fmt::format("{} of {} components outside 1e-6", bad, compared)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Willmore energy of the deformed Clifford torus", willmore},
      {"Clifford torus stays minimal", minimality},
      {"L2 distance bound and bump invariance", distance},
      {"umbilic indices and Poincare-Hopf", umbilics},
      {"line-space structures and complex points", linespace},
      {"Maslov index equals 4i", maslov},
      {"symplectic area", symplectic},
      {"neutral flow properties", flow},
      {"finite-difference oracle consistency", oracles}};
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    fmt::print("criterion {}: {} {} ({})\n", k + 1, o.pass ? "PASS" : "FAIL", criteria[k].first, o.detail);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
