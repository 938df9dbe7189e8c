#include "ngeo/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "ngeo/chart_tensor.hpp"
#include "ngeo/error.hpp"
#include "ngeo/format.hpp"
#include "ngeo/neutral_flow.hpp"
#include "ngeo/scenarios.hpp"
#include "ngeo/surface_geom.hpp"
#include "ngeo/umbilic_topology.hpp"

namespace ngeo {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

struct Sink {
  fs::path dir;
  bool timestamp = true;
  std::ostream& out;

  void csv(const std::string& name, const std::function<void(std::ostream&)>& body) const {
    std::ofstream f = open(name);
    if (timestamp) f << "# generated " << utc_now() << '\n';
    body(f);
    done(name, f);
  }
  void json_report(const std::string& name, const std::vector<ScenarioReport>& reports) const {
    std::ofstream f = open(name);
    write_report_json(f, reports, timestamp);
    done(name, f);
  }

 private:
  std::ofstream open(const std::string& name) const {
    fs::create_directories(dir);
    std::ofstream f(dir / name);
    if (!f) throw ConfigError("cannot write '" + (dir / name).string() + "'");
    f.precision(17);
    return f;
  }
  void done(const std::string& name, std::ofstream& f) const {
    f.close();
    if (!f) throw ConfigError("failed writing '" + (dir / name).string() + "'");
    out << "wrote " << (dir / name).string() << '\n';
  }
};

// Keys accepted in a --config document, each tied to the flag it overrides.
// Flags given on the command line take precedence over the document.
class Bindings {
 public:
  template <class T>
  CLI::Option* bind(CLI::App* app, const std::string& flag, const std::string& key, T& var,
                    const std::string& help) {
    CLI::Option* o = app->add_option(flag, var, help);
    if constexpr (!std::is_same_v<T, std::vector<double>>) o->capture_default_str();
    list_.push_back({key, o, [&var](const json& j) { var = j.get<T>(); }});
    return o;
  }
  CLI::Option* bind_list(CLI::App* app, const std::string& flag, const std::string& key, std::vector<double>& var,
                         const std::string& help) {
    return bind(app, flag, key, var, help)->delimiter(',');
  }
  CLI::Option* bind_flag(CLI::App* app, const std::string& flag, const std::string& key, bool& var,
                         const std::string& help) {
    CLI::Option* o = app->add_flag(flag, var, help);
    list_.push_back({key, o, [&var](const json& j) { var = j.get<bool>(); }});
    return o;
  }

  void apply(const std::string& path, const std::string& command) const {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config '" + path + "' must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
      const Entry* e = find(key);
      if (!e) throw ConfigError("unknown config key '" + key + "' for " + command + " (valid: " + valid() + ")");
      if (e->option->count() > 0) continue;
      try {
        e->apply(value);
      } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
      }
    }
  }

 private:
  struct Entry {
    std::string key;
    CLI::Option* option;
    std::function<void(const json&)> apply;
  };
  const Entry* find(const std::string& key) const {
    for (const auto& e : list_)
      if (e.key == key) return &e;
    return nullptr;
  }
  std::string valid() const {
    std::string s;
    for (const auto& e : list_) s += (s.empty() ? "" : ", ") + e.key;
    return s;
  }
  std::vector<Entry> list_;
};

struct SurfaceArgs {
  std::string id = "ellipsoid";
  double a = kUnset, b = kUnset, c = kUnset, R = kUnset, r = kUnset, half_width = kUnset;
  std::string expression;

  void add(CLI::App* app, Bindings& bind, const std::string& fallback) {
    id = fallback;
    bind.bind(app, "--surface", "surface", id,
              "clifford, round-sphere, ellipsoid, torus-revolution, paraboloid, saddle or graph");
    bind.bind(app, "--a", "a", a, "ellipsoid semi-axis a");
    bind.bind(app, "--b", "b", b, "ellipsoid semi-axis b");
    bind.bind(app, "--c", "c", c, "ellipsoid semi-axis c");
    bind.bind(app, "--R", "R", R, "torus major radius");
    bind.bind(app, "--r", "r", r, "torus minor radius or sphere radius");
    bind.bind(app, "--half-width", "half_width", half_width, "half width of graph surfaces");
    bind.bind(app, "--expression", "expression", expression, "z(x, y) for the graph surface");
  }
  SurfaceSpec spec() const {
    SurfaceSpec s{id, {}};
    const std::pair<const char*, double> all[] = {{"a", a}, {"b", b}, {"c", c},
                                                  {"R", R}, {"r", r}, {"half_width", half_width}};
    for (const auto& [k, v] : all)
      if (!std::isnan(v)) s.params[k] = v;
    return s;
  }
  SurfaceImmersion surface() const {
    const SurfaceSpec s = spec();
    return surface_by_id(s.id, s.params, expression);
  }
};

int summarize(std::ostream& out, const std::vector<ScenarioReport>& reports) {
  bool ok = true;
  for (const auto& r : reports) {
    std::size_t pass = 0;
    for (const auto& a : r.assertions) pass += a.pass ? 1 : 0;
    out << r.id << ": " << pass << "/" << r.assertions.size() << " assertions pass\n";
    for (const auto& a : r.assertions)
      if (!a.pass)
        out << "  FAIL " << a.name << ": value " << num(a.value) << " " << a.comparison << " reference "
            << num(a.reference) << " (tolerance " << num(a.tolerance) << ")\n";
    ok = ok && r.all_pass();
  }
  return ok ? kExitOk : kExitAssertion;
}

MetricField pick_metric(const std::string& id, double eps, const std::string& file) {
  if (!file.empty()) return load_metric_file(file);
  std::map<std::string, double> params;
  if (!std::isnan(eps)) params["eps"] = eps;
  return metric_by_id(id, params);
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Geometry experiments: Willmore energy, umbilics, oriented-line space and neutral flow", "ngeo"};
  app.require_subcommand(1);
  std::string output_dir;
  if (const char* env = std::getenv("NGEO_OUTPUT_DIR")) output_dir = env;
  if (output_dir.empty()) output_dir = ".";
  bool no_timestamp = false;
  app.add_option("-o,--output-dir", output_dir, "output directory (default $NGEO_OUTPUT_DIR or .)");
  app.add_flag("--no-timestamp", no_timestamp, "omit generation time and runtimes from outputs");

  std::string config_path;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON document overriding this command's options");
  };

  // willmore-sweep
  CLI::App* ws = app.add_subcommand("willmore-sweep", "Willmore energy of the Clifford torus in deformed metrics");
  Bindings ws_bind;
  WillmoreSweepOptions ws_opt;
  ws_bind.bind_list(ws, "--eps", "eps", ws_opt.eps, "comma-separated deformation parameters in [0,1)");
  ws_bind.bind(ws, "--grid", "grid", ws_opt.grid, "quadrature points per axis");
  ws_bind.bind(ws, "--samples", "samples", ws_opt.h_samples, "samples per axis for max |H|");
  add_config(ws);

  // distance-check
  CLI::App* dc = app.add_subcommand("distance-check", "L2 distance of the bumped metrics against the cubic bound");
  Bindings dc_bind;
  DistanceCheckOptions dc_opt;
  dc_bind.bind_list(dc, "--eps", "eps", dc_opt.eps, "comma-separated deformation parameters in [0,1)");
  dc_bind.bind(dc, "--resolution", "resolution", dc_opt.resolution, "distance quadrature points per axis");
  dc_bind.bind(dc, "--grid", "grid", dc_opt.grid, "Willmore quadrature points per axis");
  add_config(dc);

  // umbilics
  CLI::App* um = app.add_subcommand("umbilics", "Umbilic scan, indices and conjecture audit");
  Bindings um_bind;
  SurfaceArgs um_surf;
  um_surf.add(um, um_bind, "ellipsoid");
  std::string um_metric = "flat-r3", um_metric_file;
  double um_eps = kUnset;
  int um_grid = 256;
  double um_loop = 4.0;
  um_bind.bind(um, "--metric", "metric", um_metric, "flat-r3, round-s3, hopf-eps or hopf-eps-bumped");
  um_bind.bind(um, "--metric-eps", "metric_eps", um_eps, "eps for the hopf metrics");
  um_bind.bind(um, "--metric-file", "metric_file", um_metric_file, "JSON metric file");
  um_bind.bind(um, "--grid", "grid", um_grid, "scan cells per axis");
  um_bind.bind(um, "--loop-cells", "loop_cells", um_loop, "index loop radius in cells");
  add_config(um);

  // linespace-audit
  CLI::App* la = app.add_subcommand("linespace-audit", "Checks of the neutral structure and complex points");
  Bindings la_bind;
  SurfaceArgs la_surf;
  la_surf.add(la, la_bind, "ellipsoid");
  LinespaceAuditOptions la_opt;
  la_bind.bind(la, "--samples", "samples", la_opt.samples, "random samples");
  la_bind.bind(la, "--seed", "seed", la_opt.seed, "random seed");
  la_bind.bind(la, "--grid", "grid", la_opt.grid, "complex point scan cells per axis");
  add_config(la);

  // maslov
  CLI::App* ms = app.add_subcommand("maslov", "Maslov index of direction loops against umbilic indices");
  Bindings ms_bind;
  SurfaceArgs ms_surf;
  ms_surf.add(ms, ms_bind, "ellipsoid");
  std::vector<double> ms_center;
  double ms_radius = kUnset;
  MaslovOptions ms_opt;
  ms_bind.bind_list(ms, "--center", "center", ms_center, "loop center direction x,y,z");
  ms_bind.bind(ms, "--radius", "radius", ms_radius, "loop angular radius (radians)");
  ms_bind.bind(ms, "--points", "points", ms_opt.points, "loop vertices");
  add_config(ms);

  // flow-run
  CLI::App* fr = app.add_subcommand("flow-run", "Mean curvature flow of a disc in oriented-line space");
  FlowConfig fc;
  auto fr_steps = fr->add_option("--steps", fc.steps, "step budget");
  auto fr_grid = fr->add_option("--grid", fc.grid, "samples per side");
  auto fr_h = fr->add_option("--step", fc.h, "time step h (0: stable step)");
  auto fr_angle = fr->add_option("--angle", fc.angle_target, "target hyperbolic angle B");
  auto fr_holo = fr->add_option("--holo", fc.holo_constant, "holomorphicity constant C");
  auto fr_twist = fr->add_option("--twist", fc.twist, "twist strength (0: automatic)");
  auto fr_section = fr->add_option("--section", fc.section, "ellipsoid or zero");
  auto fr_initial = fr->add_option("--initial", fc.initial, "section or perturbed");
  auto fr_snap = fr->add_option("--snapshot-every", fc.snapshot_every, "write the state every k steps");
  bool fr_no_penalty = false;
  fr->add_flag("--no-penalty", fr_no_penalty, "disable the boundary angle penalty");
  add_config(fr);

  // toponogov-probe
  CLI::App* tp = app.add_subcommand("toponogov-probe", "Smallest umbilic discriminant on growing parameter discs");
  Bindings tp_bind;
  SurfaceArgs tp_surf;
  tp_surf.add(tp, tp_bind, "saddle");
  std::vector<double> tp_radii{0.5, 1.0, 2.0, 3.0}, tp_center{0.0, 0.0};
  int tp_resolution = 200;
  tp_bind.bind_list(tp, "--radii", "radii", tp_radii, "ascending disc radii");
  tp_bind.bind_list(tp, "--center", "center", tp_center, "disc center s,t");
  tp_bind.bind(tp, "--resolution", "resolution", tp_resolution, "lattice points per max radius");
  add_config(tp);

  // report
  CLI::App* rp = app.add_subcommand("report", "All scenarios with a combined report");
  Bindings rp_bind;
  bool rp_skip_flow = false;
  rp_bind.bind_flag(rp, "--skip-flow", "skip_flow", rp_skip_flow, "omit the flow scenario");
  add_config(rp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const Sink sink{output_dir, !no_timestamp, out};
  try {
    if (ws->parsed()) {
      if (!config_path.empty()) ws_bind.apply(config_path, "willmore-sweep");
      const ScenarioReport r = willmore_sweep(ws_opt);
      sink.csv("willmore_sweep.csv", [&](std::ostream& o) { write_table_csv(o, r.table); });
      sink.json_report("willmore_sweep.json", {r});
      return summarize(out, {r});
    }
    if (dc->parsed()) {
      if (!config_path.empty()) dc_bind.apply(config_path, "distance-check");
      const ScenarioReport r = distance_bound_check(dc_opt);
      sink.csv("distance_check.csv", [&](std::ostream& o) { write_table_csv(o, r.table); });
      sink.json_report("distance_check.json", {r});
      return summarize(out, {r});
    }
    if (um->parsed()) {
      if (!config_path.empty()) um_bind.apply(config_path, "umbilics");
      const SurfaceImmersion s = um_surf.surface();
      const MetricField g = pick_metric(um_metric, um_eps, um_metric_file);
      AuditOptions ao;
      ao.scan.ns = ao.scan.nt = um_grid;
      ao.loop_cells = um_loop;
      const AuditReport audit = conjecture_audit(s, g, ao);
      ScenarioReport r;
      r.id = "umbilics";
      r.parameters = {{"surface", s.id()}, {"metric", g.id()}, {"grid", double(um_grid)}, {"loop_cells", um_loop}};
      r.assertions = audit_assertions(audit, "");
      r.notes = audit.warnings;
      r.table.columns = {"s", "t", "discriminant", "index", "isolated"};
      for (const auto& rec : audit.records)
        r.table.rows.push_back({rec.location[0], rec.location[1], rec.discriminant,
                                rec.index ? Cell(*rec.index) : Cell(std::string("n/a")),
                                std::string(rec.isolated ? "yes" : "no")});
      sink.csv("umbilics.csv", [&](std::ostream& o) { write_umbilic_csv(o, audit.records); });
      sink.json_report("umbilics.json", {r});
      out << audit.records.size() << " umbilic record(s), index sum " << num(audit.index_sum) << ", Euler "
          << (audit.closed ? std::to_string(audit.euler) : std::string("n/a (open surface)")) << '\n';
      return summarize(out, {r});
    }
    if (la->parsed()) {
      if (!config_path.empty()) la_bind.apply(config_path, "linespace-audit");
      la_opt.surface = la_surf.spec();
      const ScenarioReport r = linespace_audit(la_opt);
      sink.csv("linespace_audit.csv", [&](std::ostream& o) { write_table_csv(o, r.table); });
      sink.json_report("linespace_audit.json", {r});
      return summarize(out, {r});
    }
    if (ms->parsed()) {
      if (!config_path.empty()) ms_bind.apply(config_path, "maslov");
      ms_opt.surface = ms_surf.spec();
      if (!ms_center.empty() || !std::isnan(ms_radius)) {
        if (ms_center.size() != 3 || std::isnan(ms_radius))
          throw ConfigError("a custom loop needs --center x,y,z and --radius");
        ms_opt.loops.push_back({{ms_center[0], ms_center[1], ms_center[2]}, ms_radius});
      }
      const ScenarioReport r = maslov_suite(ms_opt);
      sink.csv("maslov.csv", [&](std::ostream& o) { write_table_csv(o, r.table); });
      sink.json_report("maslov.json", {r});
      return summarize(out, {r});
    }
    if (fr->parsed()) {
      FlowConfig merged = config_path.empty() ? FlowConfig{} : load_flow_config(config_path);
      if (fr_steps->count()) merged.steps = fc.steps;
      if (fr_grid->count()) merged.grid = fc.grid;
      if (fr_h->count()) merged.h = fc.h;
      if (fr_angle->count()) merged.angle_target = fc.angle_target;
      if (fr_holo->count()) merged.holo_constant = fc.holo_constant;
      if (fr_twist->count()) merged.twist = fc.twist;
      if (fr_section->count()) merged.section = fc.section;
      if (fr_initial->count()) merged.initial = fc.initial;
      if (fr_snap->count()) merged.snapshot_every = fc.snapshot_every;
      if (fr_no_penalty) merged.penalty = false;
      // Re-validate the merged values.
      merged = parse_flow_config(json{{"grid", merged.grid},
                                      {"half_width", merged.half_width},
                                      {"h", merged.h},
                                      {"cfl", merged.cfl},
                                      {"steps", merged.steps},
                                      {"angle_target", merged.angle_target},
                                      {"holo_constant", merged.holo_constant},
                                      {"twist", merged.twist},
                                      {"section", merged.section},
                                      {"a", merged.a},
                                      {"b", merged.b},
                                      {"c", merged.c},
                                      {"initial", merged.initial},
                                      {"perturbation", merged.perturbation},
                                      {"penalty_weight", merged.penalty_weight},
                                      {"penalty", merged.penalty},
                                      {"area_safeguard", merged.area_safeguard},
                                      {"stagnation_tol", merged.stagnation_tol},
                                      {"snapshot_every", merged.snapshot_every}}
                                     .dump());
      FlowCheckOptions fo;
      fo.config = merged;
      const FlowCheck fcheck = flow_check(fo);
      const FlowState& st = fcheck.run.state;
      sink.csv("flow.csv", [&](std::ostream& o) { write_flow_csv(o, st.history); });
      sink.csv("flow_final.csv", [&](std::ostream& o) { write_flow_snapshot(o, st); });
      for (const auto& snap : fcheck.run.snapshots) {
        const int step = snap.history.empty() ? 0 : snap.history.back().step;
        sink.csv("flow_snapshot_" + std::to_string(step) + ".csv", [&](std::ostream& o) { write_flow_snapshot(o, snap); });
      }
      ScenarioReport r = fcheck.report;
      r.table = {};
      sink.json_report("flow.json", {r});
      out << "termination: " << fcheck.run.termination << '\n';
      const int code = summarize(out, {r});
      if (fcheck.run.termination == "signature-loss" || fcheck.run.termination == "projection-failure") {
        err << "numerical failure: " << fcheck.run.error << '\n';
        return kExitNumerical;
      }
      return code;
    }
    if (tp->parsed()) {
      if (!config_path.empty()) tp_bind.apply(config_path, "toponogov-probe");
      if (tp_center.size() != 2) throw ConfigError("--center needs two values s,t");
      const SurfaceImmersion s = tp_surf.surface();
      const std::vector<double> minima = toponogov_probe(s, flat_r3(), tp_radii, tp_resolution, {tp_center[0], tp_center[1]});
      ScenarioReport r;
      r.id = "toponogov-probe";
      r.parameters = {{"surface", s.id()}, {"resolution", double(tp_resolution)}};
      r.table.columns = {"radius", "min_discriminant"};
      bool monotone = true;
      for (std::size_t k = 0; k < minima.size(); ++k) {
        r.table.rows.push_back({tp_radii[k], minima[k]});
        if (k > 0 && minima[k] > minima[k - 1]) monotone = false;
      }
      r.assertions.push_back(make_assertion("min_discriminant_non_increasing", monotone, 1.0, 0.0, "eq", "definition"));
      sink.csv("toponogov.csv", [&](std::ostream& o) { write_table_csv(o, r.table); });
      sink.json_report("toponogov.json", {r});
      return summarize(out, {r});
    }
    if (rp->parsed()) {
      if (!config_path.empty()) rp_bind.apply(config_path, "report");
      std::vector<ScenarioReport> all{willmore_sweep(), distance_bound_check(), caratheodory_suite(),
                                      linespace_audit(), maslov_suite()};
      if (!rp_skip_flow) {
        ScenarioReport f = flow_check().report;
        f.table = {};
        all.push_back(std::move(f));
      }
      sink.json_report("report.json", all);
      sink.csv("report_summary.csv", [&](std::ostream& o) { write_report_csv(o, all); });
      return summarize(out, all);
    }
  } catch (const SignatureLossError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ProjectionError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const UnreliableLoopError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ImmersionError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace ngeo
