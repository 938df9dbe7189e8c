#include "ngeo/chart_tensor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>

#include "ngeo/expr.hpp"
#include "ngeo/quadrature.hpp"

namespace ngeo {

ChartDescriptor ChartDescriptor::cartesian() {
  ChartDescriptor c;
  c.kind = ChartKind::Cartesian;
  c.names = {"x", "y", "z"};
  const double inf = std::numeric_limits<double>::infinity();
  c.lower = {-inf, -inf, -inf};
  c.upper = {inf, inf, inf};
  return c;
}

ChartDescriptor ChartDescriptor::hopf() {
  ChartDescriptor c;
  c.kind = ChartKind::Hopf;
  c.names = {"rho", "theta1", "theta2"};
  c.lower = {0.0, 0.0, 0.0};
  c.upper = {std::numbers::pi / 2.0, 2.0 * std::numbers::pi, 2.0 * std::numbers::pi};
  c.periodic = {false, true, true};
  c.open_bounds = true;
  return c;
}

bool ChartDescriptor::contains(const Vec3<double>& p) const {
  for (int i = 0; i < 3; ++i) {
    if (!std::isfinite(p[i])) return false;
    if (periodic[i]) continue;
    if (open_bounds ? (p[i] <= lower[i] || p[i] >= upper[i]) : (p[i] < lower[i] || p[i] > upper[i]))
      return false;
  }
  return true;
}

MetricField::MetricField(std::string id, ChartDescriptor chart, Evaluator eval,
                         std::map<std::string, double> params,
                         std::array<std::vector<double>, 3> breakpoints)
    : id_(std::move(id)),
      chart_(std::move(chart)),
      eval_(std::move(eval)),
      params_(std::move(params)),
      breakpoints_(std::move(breakpoints)) {}

namespace {

void require_in_chart(const ChartDescriptor& chart, const ChartPoint& p) {
  if (!chart.contains(p.coords))
    throw DomainError("point (" + std::to_string(p.coords[0]) + ", " + std::to_string(p.coords[1]) +
                      ", " + std::to_string(p.coords[2]) + ") lies outside the chart domain");
}

}  // namespace

Mat3<double> MetricField::components(const ChartPoint& p) const {
  require_in_chart(chart_, p);
  const Vec3<Jet> x{Jet(p.coords[0]), Jet(p.coords[1]), Jet(p.coords[2])};
  const Mat3<Jet> g = eval_(x);
  Mat3<double> r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = g[i][j].v;
  return r;
}

MetricJet MetricField::jet(const ChartPoint& p) const {
  require_in_chart(chart_, p);
  const Vec3<Jet> x{variable1<3>(p.coords[0], 0), variable1<3>(p.coords[1], 1),
                    variable1<3>(p.coords[2], 2)};
  const Mat3<Jet> g = eval_(x);
  MetricJet r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      r.g[i][j] = g[i][j].v;
      for (int k = 0; k < 3; ++k) r.dg[k][i][j] = g[i][j].d[k];
    }
  return r;
}

double bump_profile(double rho, const BumpProfile& bump) { return bump(rho); }

MetricField flat_r3() {
  return MetricField("flat-r3", ChartDescriptor::cartesian(), [](const Vec3<MetricField::Jet>&) {
    Mat3<MetricField::Jet> g{};
    for (int i = 0; i < 3; ++i) g[i][i] = 1.0;
    return g;
  });
}

namespace {

// Hopf-chart family  d rho^2 + sin^2 rho dth1^2 + cos^2 rho dth2^2
//                    + 2 eps Psi(rho) sin rho cos rho dth1 dth2.
template <class Cutoff>
MetricField::Evaluator hopf_family(double eps, Cutoff cutoff) {
  return [eps, cutoff](const Vec3<MetricField::Jet>& x) {
    using J = MetricField::Jet;
    const J s = sin(x[0]);
    const J c = cos(x[0]);
    Mat3<J> g{};
    g[0][0] = 1.0;
    g[1][1] = s * s;
    g[2][2] = c * c;
    g[1][2] = eps * cutoff(x[0]) * s * c;
    g[2][1] = g[1][2];
    return g;
  };
}

void check_eps(double eps) {
  if (!(eps >= 0.0 && eps < 1.0))
    throw ParameterError("eps must lie in [0, 1) for the metric to stay Riemannian, got " +
                         std::to_string(eps));
}

}  // namespace

MetricField round_s3() {
  return MetricField("round-s3", ChartDescriptor::hopf(),
                     hopf_family(0.0, [](const MetricField::Jet&) { return MetricField::Jet(0.0); }));
}

MetricField hopf_eps(double eps) {
  check_eps(eps);
  return MetricField("hopf-eps", ChartDescriptor::hopf(),
                     hopf_family(eps, [](const MetricField::Jet&) { return MetricField::Jet(1.0); }),
                     {{"eps", eps}});
}

MetricField hopf_eps_bumped(double eps) {
  check_eps(eps);
  const BumpProfile bump{eps};
  const double c = std::numbers::pi / 4.0;
  std::array<std::vector<double>, 3> breaks;
  if (eps > 0.0) breaks[0] = {c - eps / 2.0, c - eps / 4.0, c + eps / 4.0, c + eps / 2.0};
  return MetricField("hopf-eps-bumped", ChartDescriptor::hopf(),
                     hopf_family(eps, [bump](const MetricField::Jet& rho) { return bump(rho); }),
                     {{"eps", eps}}, breaks);
}

MetricField metric_by_id(const std::string& id, const std::map<std::string, double>& params) {
  auto eps = [&]() {
    auto it = params.find("eps");
    if (it == params.end()) throw ParameterError("metric '" + id + "' requires parameter eps");
    return it->second;
  };
  if (id == "flat-r3") return flat_r3();
  if (id == "round-s3") return round_s3();
  if (id == "hopf-eps") return hopf_eps(eps());
  if (id == "hopf-eps-bumped") return hopf_eps_bumped(eps());
  throw ParameterError("unknown metric '" + id +
                       "' (valid: flat-r3, round-s3, hopf-eps, hopf-eps-bumped)");
}

MetricField metric_from_expressions(const std::string& chart,
                                    const std::map<std::string, std::string>& components,
                                    const std::map<std::string, double>& params) {
  ChartDescriptor desc;
  if (chart == "cartesian") {
    desc = ChartDescriptor::cartesian();
  } else if (chart == "hopf") {
    desc = ChartDescriptor::hopf();
  } else {
    throw ParseError("unknown chart '" + chart + "' (valid: cartesian, hopf)");
  }
  const std::vector<std::string> vars(desc.names.begin(), desc.names.end());
  auto table = std::make_shared<std::array<std::array<std::shared_ptr<Expression>, 3>, 3>>();
  for (const auto& [key, text] : components) {
    if (key.size() != 3 || key[0] != 'g' || key[1] < '1' || key[1] > '3' || key[2] < '1' ||
        key[2] > '3')
      throw ParseError("invalid component key '" + key + "' (expected g11..g33)");
    const int i = key[1] - '1';
    const int j = key[2] - '1';
    auto e = std::make_shared<Expression>(Expression::parse(text, vars, params));
    if ((*table)[i][j] && (*table)[i][j]->source() != text)
      throw ParseError("component " + key + " given twice with different expressions");
    (*table)[i][j] = e;
    (*table)[j][i] = e;
  }
  auto eval = [table](const Vec3<MetricField::Jet>& x) {
    Mat3<MetricField::Jet> g{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if ((*table)[i][j]) g[i][j] = (*table)[i][j]->eval(x.data());
    return g;
  };
  return MetricField("custom", desc, eval, params);
}

MetricField load_metric_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open metric file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("metric file '" + path + "': " + e.what());
  }
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (it.key() != "chart" && it.key() != "params" && it.key() != "components")
      throw ParseError("metric file '" + path + "': unknown key '" + it.key() +
                       "' (valid: chart, params, components)");
  }
  std::map<std::string, double> params;
  if (doc.contains("params")) params = doc["params"].get<std::map<std::string, double>>();
  const auto comps = doc.at("components").get<std::map<std::string, std::string>>();
  return metric_from_expressions(doc.value("chart", std::string("cartesian")), comps, params);
}

Christoffel3 christoffel(const MetricField& metric, const ChartPoint& p) {
  const MetricJet j = metric.jet(p);
  return christoffel_from<3>(j.g, j.dg);
}

double tensor_norm_sq(const Mat3<double>& dg, const Mat3<double>& background) {
  const Eigen::Matrix3d inv =
      Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(&background[0][0]).inverse();
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) s += inv(i, k) * inv(j, l) * dg[i][j] * dg[k][l];
  return s;
}

namespace {

QuadratureRule axis_rule(const ChartDescriptor& chart, int axis, const L2DistanceOptions& opt,
                         const std::vector<double>& extra_breaks) {
  double lo = chart.lower[axis];
  double hi = chart.upper[axis];
  if (chart.periodic[axis]) return periodic_trapezoid(opt.resolution, lo, hi);
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    lo = opt.box_lower[axis];
    hi = opt.box_upper[axis];
  } else if (chart.open_bounds) {
    lo += opt.clip;
    hi -= opt.clip;
  }
  std::vector<double> breaks{lo, hi};
  for (double b : extra_breaks)
    if (b > lo && b < hi) breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  const int panels = static_cast<int>(breaks.size()) - 1;
  const int order = std::max(opt.panel_order, (opt.resolution + panels - 1) / panels);
  return composite_gauss_legendre(breaks, order);
}

}  // namespace

double l2_metric_distance(const MetricField& a, const MetricField& b,
                          const MetricField& background, const L2DistanceOptions& opt) {
  if (!a.chart().same_as(b.chart()) || !a.chart().same_as(background.chart()))
    throw DomainError("metrics live on different charts; their domains do not overlap");
  const ChartDescriptor& chart = background.chart();
  std::array<QuadratureRule, 3> rules;
  for (int axis = 0; axis < 3; ++axis) {
    std::vector<double> breaks = a.breakpoints()[axis];
    breaks.insert(breaks.end(), b.breakpoints()[axis].begin(), b.breakpoints()[axis].end());
    rules[axis] = axis_rule(chart, axis, opt, breaks);
  }
  auto integrand = [&](double x, double y, double z) {
    const ChartPoint p{{x, y, z}};
    const Mat3<double> ga = a.components(p);
    const Mat3<double> gb = b.components(p);
    const Mat3<double> g0 = background.components(p);
    Mat3<double> diff{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) diff[i][j] = ga[i][j] - gb[i][j];
    const double det =
        Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(&g0[0][0]).determinant();
    return tensor_norm_sq(diff, g0) * std::sqrt(det);
  };
  return 2.0 * tensor_quadrature_3d(rules[0], rules[1], rules[2], integrand, opt.exec);
}

}  // namespace ngeo
