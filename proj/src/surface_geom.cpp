#include "ngeo/surface_geom.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "ngeo/quadrature.hpp"

namespace ngeo {

SurfaceImmersion::SurfaceImmersion(std::string id, ChartKind chart, ParamDomain domain,
                                   Eval2 eval2, Eval3 eval3, int orientation, bool closed)
    : id_(std::move(id)),
      chart_(chart),
      domain_(domain),
      eval2_(std::move(eval2)),
      eval3_(std::move(eval3)),
      orientation_(orientation >= 0 ? 1 : -1),
      closed_(closed) {}

SurfaceJet SurfaceImmersion::jet(double s, double t) const {
  const Vec3<J2> x = eval2_(variable2<2>(s, 0), variable2<2>(t, 1));
  SurfaceJet r;
  for (int i = 0; i < 3; ++i) {
    r.x[i] = x[i].v.v;
    for (int a = 0; a < 2; ++a) {
      r.dx[a][i] = x[i].v.d[a];
      for (int b = 0; b < 2; ++b) r.ddx[a][b][i] = x[i].d[a].d[b];
    }
  }
  return r;
}

Vec3<SurfaceImmersion::J3> SurfaceImmersion::eval3(const J3& s, const J3& t) const {
  if (!eval3_) throw ParameterError("surface '" + id_ + "' has no third-order evaluator");
  return eval3_(s, t);
}

CurvatureReport fundamental_forms(const SurfaceImmersion& surface, const MetricField& metric,
                                  double s, double t) {
  if (surface.chart() != metric.chart().kind)
    throw DomainError("surface '" + surface.id() + "' and metric '" + metric.id() +
                      "' use different charts");
  const SurfaceJet jet = surface.jet(s, t);
  const MetricJet mj = metric.jet(ChartPoint{jet.x});
  const Christoffel3 gamma = christoffel_from<3>(mj.g, mj.dg);
  const Eigen::Matrix3d g = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(&mj.g[0][0]);
  const Eigen::Matrix3d ginv = g.inverse();

  auto gdot = [&](const Vec3<double>& u, const Vec3<double>& v) {
    double r = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r += g(i, j) * u[i] * v[j];
    return r;
  };

  CurvatureReport rep;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) rep.first[a][b] = gdot(jet.dx[a], jet.dx[b]);
  const Mat2& I = rep.first;
  const double det_i = I[0][0] * I[1][1] - I[0][1] * I[1][0];
  if (!(det_i > 1e-14 * I[0][0] * I[1][1]) || !(I[0][0] > 0.0))
    throw ImmersionError("degenerate tangent frame on '" + surface.id() + "' at (" +
                         std::to_string(s) + ", " + std::to_string(t) + ")");

  // Covector annihilating both tangents, raised and normalized.
  const Vec3<double> ncov = cross(jet.dx[0], jet.dx[1]);
  Vec3<double> nraw{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) nraw[i] += ginv(i, j) * ncov[j];
  const double nn = dot(ncov, nraw);
  const double scale = surface.orientation() / std::sqrt(nn);
  for (int i = 0; i < 3; ++i) rep.normal[i] = scale * nraw[i];

  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      Vec3<double> acc = jet.ddx[a][b];
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) acc[j] += gamma[j][k][l] * jet.dx[a][k] * jet.dx[b][l];
      rep.second[a][b] = -gdot(rep.normal, acc);
    }

  // Shape operator in an I-orthonormal frame: I = L L^T, S = L^-1 II L^-T.
  const double l00 = std::sqrt(I[0][0]);
  const double l10 = I[0][1] / l00;
  const double l11 = std::sqrt(I[1][1] - l10 * l10);
  const Mat2 linv{{{1.0 / l00, 0.0}, {-l10 / (l00 * l11), 1.0 / l11}}};
  Mat2 sym{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double v = 0.0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) v += linv[i][a] * rep.second[a][b] * linv[j][b];
      sym[i][j] = v;
    }
  const double A = sym[0][0];
  const double B = 0.5 * (sym[0][1] + sym[1][0]);
  const double C = sym[1][1];
  rep.discriminant = std::hypot(A - C, 2.0 * B);
  rep.trace_curvature = A + C;
  rep.mean_curvature = 0.5 * (A + C);
  rep.k1 = rep.mean_curvature + 0.5 * rep.discriminant;
  rep.k2 = rep.mean_curvature - 0.5 * rep.discriminant;
  rep.area_density = std::sqrt(det_i);

  const double alpha = 0.5 * std::atan2(2.0 * B, A - C);
  const Vec2 y{std::cos(alpha), std::sin(alpha)};
  // Parameter components w = L^-T y.
  rep.principal_direction = {linv[0][0] * y[0] + linv[1][0] * y[1], linv[1][1] * y[1]};
  rep.principal_reliable = rep.discriminant >= kPrincipalTolerance;

  double res = std::abs(gdot(rep.normal, rep.normal) - 1.0);
  for (int a = 0; a < 2; ++a) res = std::max(res, std::abs(gdot(rep.normal, jet.dx[a])));
  rep.normal_residual = res;
  return rep;
}

Curvatures curvatures(const SurfaceImmersion& surface, const MetricField& metric, double s,
                      double t) {
  const CurvatureReport r = fundamental_forms(surface, metric, s, t);
  return {r.mean_curvature, r.trace_curvature, r.k1, r.k2, r.discriminant};
}

namespace {

std::pair<QuadratureRule, QuadratureRule> surface_rules(const SurfaceImmersion& surface,
                                                        const SurfaceQuadrature& q) {
  if (!surface.closed() && !q.bounds)
    throw DomainError("surface '" + surface.id() +
                      "' is not closed; pass explicit integration bounds");
  const ParamDomain d = q.bounds.value_or(surface.domain());
  QuadratureRule rs = d.periodic_s ? periodic_trapezoid(q.ns, d.s0, d.s1)
                                   : gauss_legendre(q.ns, d.s0, d.s1);
  QuadratureRule rt = d.periodic_t ? periodic_trapezoid(q.nt, d.t0, d.t1)
                                   : gauss_legendre(q.nt, d.t0, d.t1);
  return {std::move(rs), std::move(rt)};
}

}  // namespace

double area(const SurfaceImmersion& surface, const MetricField& metric,
            const SurfaceQuadrature& q) {
  const auto [rs, rt] = surface_rules(surface, q);
  return tensor_quadrature_2d(
      rs, rt,
      [&](double s, double t) { return fundamental_forms(surface, metric, s, t).area_density; },
      q.exec);
}

double willmore_energy(const SurfaceImmersion& surface, const MetricField& metric,
                       const SurfaceQuadrature& q) {
  const auto [rs, rt] = surface_rules(surface, q);
  const bool trace = q.convention == MeanCurvatureConvention::Trace;
  return tensor_quadrature_2d(
      rs, rt,
      [&](double s, double t) {
        const CurvatureReport r = fundamental_forms(surface, metric, s, t);
        const double h = trace ? r.trace_curvature : r.mean_curvature;
        return (1.0 + h * h) * r.area_density;
      },
      q.exec);
}

std::vector<double> toponogov_probe(const SurfaceImmersion& surface, const MetricField& metric,
                                    const std::vector<double>& radii, int resolution,
                                    Vec2 center) {
  if (radii.empty()) return {};
  const double rmax = *std::max_element(radii.begin(), radii.end());
  const double h = rmax / resolution;
  const int side = 2 * resolution + 1;
  std::vector<double> disc(static_cast<std::size_t>(side) * side,
                           std::numeric_limits<double>::infinity());
  std::vector<double> dist(disc.size(), 0.0);
  for_each_index(Execution::Parallel, side, [&](int i) {
    for (int j = 0; j < side; ++j) {
      const double x = (i - resolution) * h;
      const double y = (j - resolution) * h;
      const std::size_t k = static_cast<std::size_t>(i) * side + j;
      dist[k] = std::hypot(x, y);
      if (dist[k] <= rmax * (1.0 + 1e-12))
        disc[k] = fundamental_forms(surface, metric, center[0] + x, center[1] + y).discriminant;
    }
  });
  std::vector<double> out;
  out.reserve(radii.size());
  for (double r : radii) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < disc.size(); ++k)
      if (dist[k] <= r * (1.0 + 1e-12)) m = std::min(m, disc[k]);
    out.push_back(m);
  }
  return out;
}

SurfaceImmersion clifford_torus(double rho) {
  const double two_pi = 2.0 * std::numbers::pi;
  return SurfaceImmersion::from_generic(
      "clifford", ChartKind::Hopf, ParamDomain{0.0, two_pi, 0.0, two_pi, true, true},
      [rho](const auto& s, const auto& t) {
        using T = std::decay_t<decltype(s)>;
        return Vec3<T>{T(rho), s, t};
      },
      1, true);
}

namespace {

ParamDomain sphere_domain() {
  return ParamDomain{0.0, std::numbers::pi, 0.0, 2.0 * std::numbers::pi, false, true};
}

}  // namespace

SurfaceImmersion round_sphere(double r, Vec3<double> center) {
  if (!(r > 0.0)) throw ParameterError("sphere radius must be positive");
  return SurfaceImmersion::from_generic(
      "round-sphere", ChartKind::Cartesian, sphere_domain(),
      [r, center](const auto& th, const auto& ph) {
        using T = std::decay_t<decltype(th)>;
        const T st = sin(th);
        return Vec3<T>{center[0] + r * st * cos(ph), center[1] + r * st * sin(ph),
                       center[2] + r * cos(th)};
      },
      1, true);
}

SurfaceImmersion ellipsoid(double a, double b, double c) {
  if (!(a > 0.0 && b > 0.0 && c > 0.0)) throw ParameterError("ellipsoid semi-axes must be positive");
  return SurfaceImmersion::from_generic(
      "ellipsoid", ChartKind::Cartesian, sphere_domain(),
      [a, b, c](const auto& th, const auto& ph) {
        using T = std::decay_t<decltype(th)>;
        const T st = sin(th);
        return Vec3<T>{a * st * cos(ph), b * st * sin(ph), c * cos(th)};
      },
      1, true);
}

SurfaceImmersion torus_of_revolution(double R, double r) {
  if (!(R > r && r > 0.0)) throw ParameterError("torus of revolution needs R > r > 0");
  const double two_pi = 2.0 * std::numbers::pi;
  return SurfaceImmersion::from_generic(
      "torus-revolution", ChartKind::Cartesian, ParamDomain{0.0, two_pi, 0.0, two_pi, true, true},
      [R, r](const auto& u, const auto& v) {
        using T = std::decay_t<decltype(u)>;
        const T rad = R + r * cos(v);
        return Vec3<T>{rad * cos(u), rad * sin(u), r * sin(v)};
      },
      1, true);
}

namespace {

SurfaceImmersion make_graph(std::string id, const std::string& expression, double half_width,
                            const std::map<std::string, double>& params) {
  auto e = std::make_shared<Expression>(Expression::parse(expression, {"x", "y"}, params));
  return SurfaceImmersion::from_generic(
      std::move(id), ChartKind::Cartesian,
      ParamDomain{-half_width, half_width, -half_width, half_width, false, false},
      [e](const auto& x, const auto& y) {
        using T = std::decay_t<decltype(x)>;
        const T vars[2] = {x, y};
        return Vec3<T>{x, y, e->eval(vars)};
      });
}

}  // namespace

SurfaceImmersion graph_surface(const std::string& expression, double half_width,
                               const std::map<std::string, double>& params) {
  return make_graph("graph", expression, half_width, params);
}

SurfaceImmersion paraboloid(double half_width) {
  return make_graph("paraboloid", "(x^2 + y^2) / 2", half_width, {});
}

SurfaceImmersion saddle(double half_width) { return make_graph("saddle", "x^2 - y^2", half_width, {}); }

namespace {

using J2 = SurfaceImmersion::J2;

// Second-order chain rule: R is a jet in the seeds (sigma, tau); s and t are
// jets in the caller's variables.
J2 compose2(const J2& R, const J2& s, const J2& t) {
  const double Rs = R.v.d[0], Rt = R.v.d[1];
  const double Rss = R.d[0].d[0], Rst = R.d[0].d[1], Rtt = R.d[1].d[1];
  J2 out;
  out.v.v = R.v.v;
  for (int i = 0; i < 2; ++i) {
    const double si = s.v.d[i], ti = t.v.d[i];
    const double di = Rs * si + Rt * ti;
    out.v.d[i] = di;
    out.d[i].v = di;
    for (int j = 0; j < 2; ++j) {
      const double sj = s.v.d[j], tj = t.v.d[j];
      out.d[i].d[j] = Rss * si * sj + Rst * (si * tj + sj * ti) + Rtt * ti * tj +
                      Rs * s.d[i].d[j] + Rt * t.d[i].d[j];
    }
  }
  return out;
}

}  // namespace

SurfaceImmersion parallel_surface(const SurfaceImmersion& source, double distance) {
  if (source.chart() != ChartKind::Cartesian)
    throw DomainError("parallel surfaces are only defined in the flat chart");
  if (!source.has_third_order())
    throw ParameterError("surface '" + source.id() + "' lacks the third-order jet needed to offset");
  const int orient = source.orientation();
  auto eval = [source, distance, orient](const J2& s, const J2& t) {
    using J3 = SurfaceImmersion::J3;
    const Vec3<J3> x = source.eval3(variable3<2>(s.v.v, 0), variable3<2>(t.v.v, 1));
    Vec3<J2> p, xs, xt;
    for (int i = 0; i < 3; ++i) {
      p[i] = x[i].v;
      xs[i] = x[i].d[0];
      xt[i] = x[i].d[1];
    }
    const Vec3<J2> n = normalized(cross(xs, xt));
    Vec3<J2> out;
    for (int i = 0; i < 3; ++i) out[i] = compose2(p[i] + (orient * distance) * n[i], s, t);
    return out;
  };
  return SurfaceImmersion(source.id() + "-offset", ChartKind::Cartesian, source.domain(), eval, {},
                          orient, source.closed());
}

SurfaceImmersion surface_by_id(const std::string& id, const std::map<std::string, double>& params,
                               const std::string& expression) {
  auto get = [&](const std::string& key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  if (id == "clifford") return clifford_torus();
  if (id == "round-sphere")
    return round_sphere(get("r", 1.0), {get("cx", 0.0), get("cy", 0.0), get("cz", 0.0)});
  if (id == "ellipsoid") return ellipsoid(get("a", 2.0), get("b", 1.5), get("c", 1.0));
  if (id == "torus-revolution") return torus_of_revolution(get("R", 2.0), get("r", 1.0));
  if (id == "paraboloid") return paraboloid(get("half_width", 4.0));
  if (id == "saddle") return saddle(get("half_width", 4.0));
  if (id == "graph") {
    if (expression.empty()) throw ParameterError("surface 'graph' requires an expression z(x, y)");
    return graph_surface(expression, get("half_width", 4.0), params);
  }
  throw ParameterError(
      "unknown surface '" + id +
      "' (valid: clifford, round-sphere, ellipsoid, torus-revolution, graph, paraboloid, saddle)");
}

}  // namespace ngeo
