#pragma once

// Packaged experiments with per-assertion verdicts and report writers.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ngeo/neutral_flow.hpp"
#include "ngeo/parallel.hpp"
#include "ngeo/surface_geom.hpp"

namespace ngeo {

inline constexpr int kReportSchemaVersion = 1;

/// One numeric check. `comparison` is one of
///   rel: |value - reference| <= tolerance * |reference|
///   abs: |value - reference| <= tolerance
///   le, lt, gt, ge: value <= / < / > / >= reference
///   eq: value == reference
/// `provenance` says where the reference comes from: closed-form,
/// published-bound, cross-check, regression or definition.
struct Assertion {
  std::string name;
  double value = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  std::string comparison;
  std::string provenance;
  bool pass = false;
};

Assertion make_assertion(std::string name, double value, double reference, double tolerance,
                         std::string comparison, std::string provenance);

using Cell = std::variant<double, std::string>;

struct ScenarioTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct ScenarioReport {
  std::string id;
  std::vector<std::pair<std::string, Cell>> parameters;
  ScenarioTable table;
  std::vector<Assertion> assertions;
  std::vector<std::string> notes;
  double runtime_seconds = 0.0;

  bool all_pass() const;
};

struct WillmoreSweepOptions {
  std::vector<double> eps{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  int grid = 128;           ///< quadrature points per axis
  int h_samples = 100;      ///< per axis for max |H|
  double rel_tol = 1e-8;
  double h_tol = 1e-10;
  Execution exec = Execution::Parallel;
};

/// Clifford torus in the deformed Hopf metrics. Throws ParameterError for eps
/// outside [0, 1).
ScenarioReport willmore_sweep(const WillmoreSweepOptions& opt = {});

struct DistanceCheckOptions {
  std::vector<double> eps{0.4, 0.2, 0.1};
  int resolution = 24;  ///< per axis of the distance quadrature
  int grid = 128;       ///< Willmore quadrature points per axis
  double w_tol = 1e-10;
  double slope_tol = 0.2;
  Execution exec = Execution::Parallel;
};

/// Squared L2 distance from the round metric to the bumped family, the
/// 16 pi^2 eps^3 bound, Willmore invariance under the bump and the cubic
/// scaling of the distance.
ScenarioReport distance_bound_check(const DistanceCheckOptions& opt = {});

struct SurfaceSpec {
  std::string id;
  std::map<std::string, double> params;
};

struct CaratheodoryOptions {
  std::vector<SurfaceSpec> surfaces{{"ellipsoid", {{"a", 2.0}, {"b", 1.5}, {"c", 1.0}}},
                                    {"round-sphere", {{"r", 1.0}}},
                                    {"torus-revolution", {{"R", 2.0}, {"r", 1.0}}}};
  int grid = 256;            ///< umbilic and complex-point scans
  double match_cells = 2.0;  ///< umbilic vs complex point separation
  double lagrangian_tol = 1e-8;
  int lagrangian_samples = 64;
  Execution exec = Execution::Parallel;
};

/// Umbilic audit, complex points of the normal congruence and Maslov loops
/// for each surface, cross-checked against each other.
ScenarioReport caratheodory_suite(const CaratheodoryOptions& opt = {});

struct LinespaceAuditOptions {
  int samples = 1000;
  std::uint64_t seed = 12345;
  SurfaceSpec surface{"ellipsoid", {{"a", 2.0}, {"b", 1.5}, {"c", 1.0}}};
  int grid = 512;
  double match_cells = 2.0;
  double structure_tol = 1e-10;  ///< J^2 = -I and omega(J., J.) = omega
  double wirtinger_tol = 1e-9;
  double lagrangian_tol = 1e-8;
  Execution exec = Execution::Parallel;
};

/// Random-sample checks of (J, omega, G) and the Wirtinger identity, the
/// Lagrangian property of a normal congruence and the match between its
/// complex points and the surface umbilics.
ScenarioReport linespace_audit(const LinespaceAuditOptions& opt = {});

struct MaslovLoop {
  Vec3<double> center{0, 0, 1};
  double radius = 0.2;  ///< angular radius on the sphere of directions
};

struct MaslovOptions {
  SurfaceSpec surface{"ellipsoid", {{"a", 2.0}, {"b", 1.5}, {"c", 1.0}}};
  /// Empty: loops enclosing no umbilic, the first umbilic and the two
  /// umbilics with positive first normal component.
  std::vector<MaslovLoop> loops;
  int points = 64;
  Execution exec = Execution::Parallel;
};

/// mu from the section defect against 4 i from the principal line field of
/// the surface along the same loop.
ScenarioReport maslov_suite(const MaslovOptions& opt = {});

struct FlowCheckOptions {
  FlowConfig config;
  double area_tol = 1e-10;      ///< allowed area decrease per step
  double normal_tol = 1e-8;
  double stationary_tol = 1e-10;  ///< per step, maximal configuration
  int stationary_steps = 20;
};

struct FlowCheck {
  ScenarioReport report;
  FlowRun run;
};

/// Runs the flow and asserts the monitored properties on its history, plus
/// stationarity of a maximal disc in the twisted zero section.
FlowCheck flow_check(const FlowCheckOptions& opt = {});

/// Applicable checks of an umbilic audit as assertions named prefix + check.
struct AuditReport;
std::vector<Assertion> audit_assertions(const AuditReport& audit, const std::string& prefix);

/// JSON report. `timestamp` adds generation time and runtime.
void write_report_json(std::ostream& out, const std::vector<ScenarioReport>& reports, bool timestamp);
/// Flat CSV: scenario, assertion, value, reference, tolerance, comparison,
/// provenance, pass.
void write_report_csv(std::ostream& out, const std::vector<ScenarioReport>& reports);
/// The scenario table as CSV.
void write_table_csv(std::ostream& out, const ScenarioTable& table);

}  // namespace ngeo
