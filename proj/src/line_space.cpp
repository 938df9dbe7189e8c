#include "ngeo/line_space.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "ngeo/error.hpp"
#include "ngeo/format.hpp"
#include "ngeo/quadrature.hpp"
#include "ngeo/umbilic_topology.hpp"
#include "zero_scan.hpp"

namespace ngeo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kPi = std::numbers::pi;

Eigen::Matrix<double, 6, 1> stack(const LineTangent& x) {
  Eigen::Matrix<double, 6, 1> v;
  v << x.du[0], x.du[1], x.du[2], x.dV[0], x.dV[1], x.dV[2];
  return v;
}

LineTangent unstack(const OrientedLine& base, const Eigen::Matrix<double, 6, 1>& v) {
  return {base, {v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
}

Vec2 cell_center(const ParamDomain& d, int ns, int nt, int i, int j) {
  return {d.s0 + (i + 0.5) * d.length_s() / ns, d.t0 + (j + 0.5) * d.length_t() / nt};
}

// Phase continuation mod 2 pi, in turns.
Turning phase_turning(const std::vector<double>& phase) {
  Turning t;
  double total = 0.0;
  const std::size_t n = phase.size();
  for (std::size_t k = 0; k < n; ++k) {
    double step = phase[(k + 1) % n] - phase[k];
    step -= 2.0 * kPi * std::round(step / (2.0 * kPi));
    total += step;
    t.max_step = std::max(t.max_step, std::abs(step));
  }
  t.turns = total / (2.0 * kPi);
  return t;
}

int stable_integer(const std::function<Turning(int)>& turning, int n0) {
  const double h = stable_half_integer(turning, n0);
  if (h != std::round(h)) throw UnreliableLoopError("defect winding is not an integer");
  return static_cast<int>(h);
}

// Euclidean-orthonormal basis of the plane spanned by the graph over du.
std::array<LineTangent, 2> du_orthonormal(const SectionJet& jet) {
  Eigen::Matrix<double, 3, 2> du;
  for (int a = 0; a < 2; ++a)
    for (int i = 0; i < 3; ++i) du(i, a) = jet.du[a][i];
  // Gram^{-1/2} maps the coordinate tangents to du-orthonormal ones.
  const Eigen::Matrix2d gram = du.transpose() * du;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(gram);
  const Eigen::Matrix2d w = es.operatorInverseSqrt();
  std::array<LineTangent, 2> out;
  for (int k = 0; k < 2; ++k) {
    const LineTangent x = w(0, k) * jet.tangent(0) + w(1, k) * jet.tangent(1);
    out[k] = x;
  }
  return out;
}

}  // namespace

OrientedLine OrientedLine::through(const Vec3<double>& point, const Vec3<double>& dir) {
  const Vec3<double> u = normalized(dir);
  return {u, reject(point, u)};
}

double OrientedLine::residual() const {
  return std::max(std::abs(norm(u) - 1.0), std::abs(dot(u, V)));
}

LineTangent LineTangent::make(const OrientedLine& base, const Vec3<double>& du,
                              const Vec3<double>& dV) {
  const Vec3<double> du_p = reject(du, base.u);
  const Vec3<double> dV_p = reject(dV, base.u) - dot(base.V, du_p) * base.u;
  return {base, du_p, dV_p};
}

double LineTangent::constraint_residual() const {
  return std::max(std::abs(dot(base.u, du)), std::abs(dot(base.u, dV) + dot(base.V, du)));
}

LineTangent operator+(const LineTangent& a, const LineTangent& b) {
  return {a.base, a.du + b.du, a.dV + b.dV};
}

LineTangent operator*(double s, const LineTangent& a) { return {a.base, s * a.du, s * a.dV}; }

LineTangent apply_j(const LineTangent& x) {
  const Vec3<double>& u = x.base.u;
  const Vec3<double> du = cross(u, x.du);
  const Vec3<double> dV = cross(u, reject(x.dV, u)) - dot(x.base.V, du) * u;
  return {x.base, du, dV};
}

double omega(const LineTangent& x, const LineTangent& y) {
  return dot(x.dV, y.du) - dot(y.dV, x.du);
}

double neutral_metric(const LineTangent& x, const LineTangent& y) {
  return omega(apply_j(x), y);
}

NeutralValues neutral_structures(const LineTangent& x, const LineTangent& y) {
  const double scale = 1.0 + norm(x.base.V);
  if (norm(x.base.u - y.base.u) > 1e-12 || norm(x.base.V - y.base.V) > 1e-12 * scale)
    throw ParameterError("tangent vectors are attached to different lines");
  const LineTangent jx = apply_j(x);
  return {jx, omega(x, y), omega(jx, y)};
}

Vec3<double> reference_frame(const Vec3<double>& u, const Vec3<double>& hint) {
  Vec3<double> r = reject(hint, u);
  if (norm(r) < 0.1 * norm(hint)) {
    Vec3<double> axis{0, 0, 0};
    int k = 0;
    for (int i = 1; i < 3; ++i)
      if (std::abs(u[i]) < std::abs(u[k])) k = i;
    axis[k] = 1.0;
    r = reject(axis, u);
  }
  return normalized(r);
}

Eigen::Vector4d tangent_coordinates(const LineTangent& x, const Vec3<double>& ea) {
  const Vec3<double> eb = cross(x.base.u, ea);
  return {dot(x.du, ea), dot(x.du, eb), dot(x.dV, ea), dot(x.dV, eb)};
}

std::string to_string(PlaneType t) {
  switch (t) {
    case PlaneType::PositiveDefinite: return "positive-definite";
    case PlaneType::NegativeDefinite: return "negative-definite";
    case PlaneType::Lorentz: return "lorentz";
    case PlaneType::Degenerate: return "degenerate";
    case PlaneType::TotallyNull: return "totally-null";
  }
  return "unknown";
}

PlaneClass classify_plane(const LineTangent& x1, const LineTangent& x2, double tol) {
  const Eigen::Matrix<double, 6, 1> a = stack(x1), b = stack(x2);
  const double na = a.norm();
  if (!(na > 0.0)) throw ParameterError("plane spanned by dependent tangent vectors");
  const Eigen::Matrix<double, 6, 1> e1 = a / na;
  Eigen::Matrix<double, 6, 1> e2 = b - b.dot(e1) * e1;
  if (!(e2.norm() > 1e-12 * b.norm())) throw ParameterError("plane spanned by dependent tangent vectors");
  e2.normalize();
  const LineTangent t1 = unstack(x1.base, e1), t2 = unstack(x1.base, e2);

  PlaneClass pc;
  pc.gram = {{{neutral_metric(t1, t1), neutral_metric(t1, t2)},
              {neutral_metric(t2, t1), neutral_metric(t2, t2)}}};
  Eigen::Matrix2d gm;
  gm << pc.gram[0][0], 0.5 * (pc.gram[0][1] + pc.gram[1][0]), 0.5 * (pc.gram[0][1] + pc.gram[1][0]),
      pc.gram[1][1];
  const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(gm).eigenvalues();
  pc.eigenvalues = {ev[0], ev[1]};
  pc.omega = omega(t1, t2);

  Eigen::Matrix<double, 6, 2> basis;
  basis << e1, e2;
  for (const auto& t : {t1, t2}) {
    const Eigen::Matrix<double, 6, 1> j = stack(apply_j(t));
    const Eigen::Matrix<double, 6, 1> off = j - basis * (basis.transpose() * j);
    pc.holomorphic_defect = std::max(pc.holomorphic_defect, off.norm() / j.norm());
  }

  const double eps = tol * (1.0 + norm(x1.base.V)) * (1.0 + norm(x1.base.V));
  const bool z0 = std::abs(ev[0]) <= eps, z1 = std::abs(ev[1]) <= eps;
  if (z0 && z1) pc.type = PlaneType::TotallyNull;
  else if (z0 || z1) pc.type = PlaneType::Degenerate;
  else if (ev[0] > 0.0) pc.type = PlaneType::PositiveDefinite;
  else if (ev[1] < 0.0) pc.type = PlaneType::NegativeDefinite;
  else pc.type = PlaneType::Lorentz;
  pc.lagrangian = std::abs(pc.omega) <= eps;
  pc.holomorphic = pc.holomorphic_defect <= tol;
  return pc;
}

namespace {

WirtingerTerms raw_wirtinger(const LineTangent& x1, const LineTangent& x2, int sign) {
  const Vec3<double> ea = reference_frame(x1.base.u);
  Eigen::Matrix4d m;
  m.col(0) = tangent_coordinates(x1, ea);
  m.col(1) = tangent_coordinates(x2, ea);
  m.col(2) = tangent_coordinates(apply_j(x1), ea);
  m.col(3) = tangent_coordinates(apply_j(x2), ea);
  WirtingerTerms w;
  const double om = omega(x1, x2);
  w.omega_sq = om * om;
  w.det4 = sign * m.determinant();
  const double g11 = neutral_metric(x1, x1), g22 = neutral_metric(x2, x2);
  const double g12 = neutral_metric(x1, x2);
  w.det_gram = g11 * g22 - g12 * g12;
  w.residual = std::abs(w.omega_sq - w.det4 - w.det_gram);
  return w;
}

}  // namespace

int wirtinger_orientation() {
  static const int sign = [] {
    // A definite plane that is neither holomorphic nor Lagrangian.
    const OrientedLine base{{0, 0, 1}, {0.3, -0.2, 0.0}};
    const Mat2 l{{{0.4, -2.0}, {2.2, -0.1}}};
    const LineTangent x1 = LineTangent::make(base, {1, 0, 0}, {l[0][0], l[1][0], 0});
    const LineTangent x2 = LineTangent::make(base, {0, 1, 0}, {l[0][1], l[1][1], 0});
    const WirtingerTerms w = raw_wirtinger(x1, x2, 1);
    return (w.omega_sq - w.det_gram) / w.det4 > 0.0 ? 1 : -1;
  }();
  return sign;
}

WirtingerTerms wirtinger_terms(const LineTangent& x1, const LineTangent& x2) {
  return raw_wirtinger(x1, x2, wirtinger_orientation());
}

double wirtinger_residual(const LineTangent& x1, const LineTangent& x2) {
  return wirtinger_terms(x1, x2).residual;
}

PlaneGraph plane_graph(const SectionJet& jet, const Vec3<double>& ea) {
  const Vec3<double>& u = jet.line.u;
  const Vec3<double> eb = cross(u, ea);
  Eigen::Matrix2d mu, mv;
  for (int a = 0; a < 2; ++a) {
    mu(0, a) = dot(jet.du[a], ea);
    mu(1, a) = dot(jet.du[a], eb);
    mv(0, a) = dot(jet.dV[a], ea);
    mv(1, a) = dot(jet.dV[a], eb);
  }
  const double det = mu.determinant();
  if (!(std::abs(det) > 1e-14 * mu.squaredNorm()))
    return {kNaN, kNaN, {kNaN, kNaN}};
  const Eigen::Matrix2d l = mv * mu.inverse();
  PlaneGraph pg;
  pg.a = 0.5 * (l(0, 0) + l(1, 1));
  pg.b = 0.5 * (l(1, 0) - l(0, 1));
  pg.psi = {0.5 * (l(0, 0) - l(1, 1)), 0.5 * (l(0, 1) + l(1, 0))};
  return pg;
}

LineSection::LineSection(std::string id, ParamDomain domain, Eval eval, Active active)
    : id_(std::move(id)), domain_(domain), eval_(std::move(eval)), active_(std::move(active)) {}

SectionJet LineSection::make_jet(const Vec3<D1<2>>& u_raw, const Vec3<D1<2>>& w) {
  const Vec3<D1<2>> u = normalized(u_raw);
  const Vec3<D1<2>> V = reject(w, u);
  SectionJet j;
  for (int i = 0; i < 3; ++i) {
    j.line.u[i] = u[i].v;
    j.line.V[i] = V[i].v;
    for (int a = 0; a < 2; ++a) {
      j.du[a][i] = u[i].d[a];
      j.dV[a][i] = V[i].d[a];
    }
  }
  return j;
}

LineSection normal_congruence(const SurfaceImmersion& surface, int check_resolution) {
  if (surface.chart() != ChartKind::Cartesian)
    throw DomainError("normal congruences need a surface in flat R^3");
  const int orient = surface.orientation();
  LineSection::Eval eval = [surface, orient](double s, double t) {
    const Vec3<D2<2>> x = surface.eval2(variable2<2>(s, 0), variable2<2>(t, 1));
    Vec3<D1<2>> p, xs, xt;
    for (int i = 0; i < 3; ++i) {
      p[i] = x[i].v;
      xs[i] = x[i].d[0];
      xt[i] = x[i].d[1];
    }
    const Vec3<D1<2>> n = static_cast<double>(orient) * cross(xs, xt);
    return LineSection::make_jet(n, p);
  };
  LineSection sec(surface.id() + "-normals", surface.domain(), std::move(eval));
  if (check_resolution > 0) {
    int pos = 0, neg = 0;
    for (int i = 0; i < check_resolution; ++i)
      for (int j = 0; j < check_resolution; ++j) {
        const Vec2 p = cell_center(surface.domain(), check_resolution, check_resolution, i, j);
        const SectionJet jet = sec.jet(p[0], p[1]);
        const double det = dot(jet.line.u, cross(jet.du[0], jet.du[1]));
        if (det > 1e-12) ++pos;
        else if (det < -1e-12) ++neg;
      }
    if (pos > 0 && neg > 0)
      sec.warnings.push_back("Gauss map of '" + surface.id() +
                             "' is not injective on the sampled grid; section is not graphical");
  }
  return sec;
}

LineSection sphere_section(std::string id, std::function<Vec3<D1<2>>(const Vec3<D1<2>>&)> foot) {
  const ParamDomain d{0.0, kPi, 0.0, 2.0 * kPi, false, true};
  return LineSection::from_generic(std::move(id), d, [foot](const D1<2>& th, const D1<2>& ph) {
    const D1<2> st = sin(th);
    const Vec3<D1<2>> u{st * cos(ph), st * sin(ph), cos(th)};
    return std::pair{u, foot(u)};
  });
}

LineSection hemisphere_section(std::string id, std::function<Vec3<D1<2>>(const Vec3<D1<2>>&)> foot,
                               double radius) {
  if (!(radius > 0.0 && radius < 1.0))
    throw ParameterError("hemisphere radius must lie in (0, 1)");
  const ParamDomain d{-radius, radius, -radius, radius, false, false};
  return LineSection::from_generic(
      std::move(id), d,
      [foot](const D1<2>& X, const D1<2>& Y) {
        const D1<2> r2 = X * X + Y * Y;
        const D1<2> inv = 1.0 / (1.0 + r2);
        const Vec3<D1<2>> u{2.0 * X * inv, 2.0 * Y * inv, (1.0 - r2) * inv};
        return std::pair{u, foot(u)};
      },
      [radius](double X, double Y) { return X * X + Y * Y < radius * radius; });
}

LineSection zero_section() {
  return sphere_section("zero-section", [](const Vec3<D1<2>>&) { return Vec3<D1<2>>{}; });
}

Vec3<D1<2>> ellipsoid_foot(const Vec3<D1<2>>& u, double a, double b, double c) {
  const D1<2> h = sqrt(a * a * u[0] * u[0] + b * b * u[1] * u[1] + c * c * u[2] * u[2]);
  return {a * a * u[0] / h, b * b * u[1] / h, c * c * u[2] / h};
}

LineSection restrict_section(const LineSection& section, LineSection::Active keep) {
  LineSection::Active prev = section.active_predicate();
  LineSection::Active both = [prev, keep](double s, double t) {
    return (!prev || prev(s, t)) && keep(s, t);
  };
  LineSection out(section.id(), section.domain(), section.evaluator(), std::move(both));
  out.warnings = section.warnings;
  return out;
}

std::vector<double> defect_grid(const LineSection& section, int ns, int nt, Execution exec) {
  std::vector<double> g(static_cast<std::size_t>(ns) * nt, kNaN);
  for_each_index(exec, ns, [&](int i) {
    for (int j = 0; j < nt; ++j) {
      const Vec2 p = cell_center(section.domain(), ns, nt, i, j);
      if (!section.active(p[0], p[1])) continue;
      const SectionJet jet = section.jet(p[0], p[1]);
      g[static_cast<std::size_t>(i) * nt + j] = std::abs(plane_graph(jet, reference_frame(jet.line.u)).psi);
    }
  });
  return g;
}

int defect_winding(const LineSection& section, const std::function<Vec2(double)>& loop, double tol,
                   int n0) {
  // Frame reference orthogonal to the mean loop direction.
  Vec3<double> c{0, 0, 0};
  for (int k = 0; k < 16; ++k) {
    const Vec2 p = loop(2.0 * kPi * k / 16);
    c = c + section.jet(p[0], p[1]).line.u;
  }
  if (!(norm(c) > 1e-8)) throw UnreliableLoopError("loop directions are not contained in a hemisphere");
  const Vec3<double> hint = reference_frame(normalized(c));

  auto turning = [&](int n) {
    std::vector<double> phase(n);
    double area2 = 0.0;
    int det_sign = 0;
    for (int k = 0; k < n; ++k) {
      const Vec2 p = loop(2.0 * kPi * k / n);
      const Vec2 q = loop(2.0 * kPi * (k + 1) / n);
      area2 += p[0] * q[1] - p[1] * q[0];
      const SectionJet jet = section.jet(p[0], p[1]);
      const double det = dot(jet.line.u, cross(jet.du[0], jet.du[1]));
      const int sg = det > 0.0 ? 1 : -1;
      if (det_sign == 0) det_sign = sg;
      else if (sg != det_sign) throw UnreliableLoopError("section is not graphical along the loop");
      const std::complex<double> psi = plane_graph(jet, reference_frame(jet.line.u, hint)).psi;
      if (!(std::abs(psi) > tol))
        throw UnreliableLoopError("loop meets a complex point (|psi| = " + num(std::abs(psi)) + ")");
      phase[k] = std::arg(psi);
    }
    Turning t = phase_turning(phase);
    if ((area2 < 0.0) != (det_sign < 0)) t.turns = -t.turns;
    return t;
  };
  return stable_integer(turning, n0);
}

ComplexPointScan complex_point_scan(const LineSection& section, const ComplexScanOptions& opt) {
  if (opt.ns < 8 || opt.nt < 8) throw ParameterError("scan grid needs at least 8 cells per axis");
  const ParamDomain& d = section.domain();
  const std::size_t n = static_cast<std::size_t>(opt.ns) * opt.nt;
  std::vector<double> psi(n, kNaN), lnorm(n, 0.0);
  for_each_index(opt.exec, opt.ns, [&](int i) {
    for (int j = 0; j < opt.nt; ++j) {
      const Vec2 p = cell_center(d, opt.ns, opt.nt, i, j);
      if (!section.active(p[0], p[1])) continue;
      const SectionJet jet = section.jet(p[0], p[1]);
      const PlaneGraph pg = plane_graph(jet, reference_frame(jet.line.u));
      const std::size_t idx = static_cast<std::size_t>(i) * opt.nt + j;
      psi[idx] = std::abs(pg.psi);
      lnorm[idx] = std::hypot(pg.a, pg.b, std::abs(pg.psi));
    }
  });

  ComplexPointScan res;
  double lmax = 0.0;
  res.min_defect = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    if (std::isfinite(lnorm[k])) lmax = std::max(lmax, lnorm[k]);
    if (std::isfinite(psi[k])) res.min_defect = std::min(res.min_defect, psi[k]);
  }
  // The absolute floor keeps rounding noise of a vanishing L out of the scan.
  res.tolerance = std::max(opt.tol_rel * lmax, 1e-12);
  res.cell = std::max(d.length_s() / opt.ns, d.length_t() / opt.nt);

  detail::ZeroField field;
  field.domain = d;
  field.ns = opt.ns;
  field.nt = opt.nt;
  field.grid = std::move(psi);
  field.tol = res.tolerance;
  field.eval = [&](Vec2 p) {
    if (!section.active(p[0], p[1])) return kNaN;
    const SectionJet jet = section.jet(p[0], p[1]);
    return std::abs(plane_graph(jet, reference_frame(jet.line.u)).psi);
  };
  const detail::ZeroScan zs = detail::find_zeros(field);
  res.warnings = zs.warnings;

  const double r = opt.loop_cells * res.cell;
  for (const detail::Zero& z : zs.zeros) {
    ComplexPoint cp;
    cp.location = z.location;
    cp.direction = section.jet(z.location[0], z.location[1]).line.u;
    cp.defect = z.value;
    cp.isolated = z.isolated;
    if (z.near_boundary)
      res.warnings.push_back("complex point at (" + num(z.location[0]) + ", " +
                             num(z.location[1]) + ") lies on the domain boundary");
    if (cp.isolated && !z.near_boundary) {
      try {
        const Vec2 c = z.location;
        cp.winding = defect_winding(
            section, [&](double a) { return Vec2{c[0] + r * std::cos(a), c[1] + r * std::sin(a)}; },
            res.tolerance);
        cp.index = 0.5 * *cp.winding;
      } catch (const UnreliableLoopError& e) {
        res.warnings.push_back(e.what());
      }
    }
    res.points.push_back(cp);
  }
  return res;
}

std::vector<Vec3<double>> direction_circle(const Vec3<double>& center, double radius, int n) {
  if (!(radius > 0.0 && radius < kPi)) throw ParameterError("circle radius must lie in (0, pi)");
  const Vec3<double> c = normalized(center);
  const Vec3<double> e1 = reference_frame(c);
  const Vec3<double> e2 = cross(c, e1);
  std::vector<Vec3<double>> out(n);
  for (int k = 0; k < n; ++k) {
    const double a = 2.0 * kPi * k / n;
    out[k] = std::cos(radius) * c + std::sin(radius) * (std::cos(a) * e1 + std::sin(a) * e2);
  }
  return out;
}

Vec2 invert_direction(const LineSection& section, const Vec3<double>& u, Vec2 guess) {
  const Vec3<double> target = normalized(u);
  const Vec3<double> e1 = reference_frame(target);
  const Vec3<double> e2 = cross(target, e1);
  Vec2 p = guess;
  for (int iter = 0; iter < 60; ++iter) {
    const SectionJet jet = section.jet(p[0], p[1]);
    const Vec3<double> r = jet.line.u - target;
    if (norm(r) < 1e-14) return p;
    Eigen::Matrix2d jac;
    jac << dot(jet.du[0], e1), dot(jet.du[1], e1), dot(jet.du[0], e2), dot(jet.du[1], e2);
    const Eigen::Vector2d f(dot(r, e1), dot(r, e2));
    if (!(std::abs(jac.determinant()) > 1e-300)) break;
    Eigen::Vector2d step = -jac.inverse() * f;
    const double len = step.norm();
    const double cap = 0.1 * std::max(section.domain().length_s(), section.domain().length_t());
    if (len > cap) step *= cap / len;
    p = {p[0] + step[0], p[1] + step[1]};
  }
  const SectionJet jet = section.jet(p[0], p[1]);
  if (norm(jet.line.u - target) < 1e-11) return p;
  throw DomainError("direction (" + num(u[0]) + ", " + num(u[1]) + ", " + num(u[2]) +
                    ") is not reached by section '" + section.id() + "'");
}

Vec2 nearest_direction(const LineSection& section, const Vec3<double>& u, int resolution) {
  const Vec3<double> target = normalized(u);
  double best = -2.0;
  Vec2 arg{};
  for (int i = 0; i < resolution; ++i)
    for (int j = 0; j < resolution; ++j) {
      const Vec2 p = cell_center(section.domain(), resolution, resolution, i, j);
      if (!section.active(p[0], p[1])) continue;
      const double c = dot(section.jet(p[0], p[1]).line.u, target);
      if (c > best) {
        best = c;
        arg = p;
      }
    }
  if (best < -1.0) throw DomainError("section '" + section.id() + "' has no active samples");
  return arg;
}

MaslovResult maslov_index(const LineSection& section, const std::vector<Vec3<double>>& loop,
                          double tol) {
  if (loop.size() < 3) throw ParameterError("direction loop needs at least 3 vertices");
  Vec3<double> c{0, 0, 0};
  for (const auto& v : loop) c = c + normalized(v);
  if (!(norm(c) > 1e-8)) throw UnreliableLoopError("loop directions are not contained in a hemisphere");
  const Vec3<double> hint = reference_frame(normalized(c));
  const int nv = static_cast<int>(loop.size());

  MaslovResult res;
  auto turning = [&](int n) {
    const int sub = std::max(1, n / nv);
    std::vector<Vec3<double>> dirs;
    dirs.reserve(static_cast<std::size_t>(sub) * nv);
    for (int k = 0; k < nv; ++k) {
      const Vec3<double> a = normalized(loop[k]), b = normalized(loop[(k + 1) % nv]);
      const double ang = std::acos(std::clamp(dot(a, b), -1.0, 1.0));
      for (int m = 0; m < sub; ++m) {
        const double f = static_cast<double>(m) / sub;
        if (ang < 1e-12) {
          dirs.push_back(a);
          continue;
        }
        const double wa = std::sin((1 - f) * ang) / std::sin(ang), wb = std::sin(f * ang) / std::sin(ang);
        dirs.push_back(wa * a + wb * b);
      }
    }
    std::vector<double> phase(dirs.size());
    std::vector<Vec2> params(dirs.size());
    Vec2 guess = nearest_direction(section, dirs.front());
    double lmax = 0.0, pmin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < dirs.size(); ++k) {
      guess = invert_direction(section, dirs[k], guess);
      params[k] = guess;
      if (!section.active(guess[0], guess[1]))
        throw DomainError("direction loop leaves the active domain of '" + section.id() + "'");
      const SectionJet jet = section.jet(guess[0], guess[1]);
      const PlaneGraph pg = plane_graph(jet, reference_frame(jet.line.u, hint));
      lmax = std::max(lmax, std::hypot(pg.a, pg.b, std::abs(pg.psi)));
      pmin = std::min(pmin, std::abs(pg.psi));
      phase[k] = std::arg(pg.psi);
    }
    const double thr = tol > 0.0 ? tol : 1e-8 * lmax;
    if (!(pmin > thr))
      throw UnreliableLoopError("direction loop passes too close to a complex point (|psi| = " +
                                num(pmin) + ")");
    res.parameter_loop = std::move(params);
    return phase_turning(phase);
  };
  res.winding = stable_integer(turning, std::max(1024, nv));
  res.mu = 2 * res.winding;
  res.index = res.mu / 4.0;
  res.dimension = res.mu + 2;
  res.unparameterized = res.dimension - 3;
  return res;
}

SymplecticArea symplectic_area(const LineSection::Eval& disc, int nr, int nphi, Execution exec) {
  if (nr < 2 || nphi < 4) throw ParameterError("symplectic area needs nr >= 2 and nphi >= 4");
  const QuadratureRule rr = gauss_legendre(nr, 0.0, 1.0);
  const QuadratureRule rp = periodic_trapezoid(nphi, 0.0, 2.0 * kPi);
  std::vector<double> rows(nr, 0.0);
  for_each_index(exec, nr, [&](int i) {
    const double r = rr.nodes[i];
    double acc = 0.0;
    for (int j = 0; j < nphi; ++j) {
      const double x = r * std::cos(rp.nodes[j]), y = r * std::sin(rp.nodes[j]);
      const SectionJet jet = disc(x, y);
      acc += rp.weights[j] * omega(jet.tangent(0), jet.tangent(1));
    }
    rows[i] = rr.weights[i] * r * acc;
  });
  SymplecticArea out;
  out.two_form = pairwise_sum(rows);
  std::vector<double> edge(nphi);
  for (int j = 0; j < nphi; ++j) {
    const double x = std::cos(rp.nodes[j]), y = std::sin(rp.nodes[j]);
    const SectionJet jet = disc(x, y);
    const Vec3<double> du_phi = (-y) * jet.du[0] + x * jet.du[1];
    edge[j] = rp.weights[j] * dot(jet.line.V, du_phi);
  }
  out.boundary = pairwise_sum(edge);
  return out;
}

LineSection::Eval disc_in_section(const LineSection& section, Vec2 center, double radius) {
  return [section, center, radius](double x, double y) {
    SectionJet j = section.jet(center[0] + radius * x, center[1] + radius * y);
    for (int a = 0; a < 2; ++a) {
      j.du[a] = radius * j.du[a];
      j.dV[a] = radius * j.dV[a];
    }
    return j;
  };
}

LineSection holomorphic_twist(const LineSection& section, double strength, const Vec3<double>& center,
                              int check_resolution) {
  const Vec3<double> c = normalized(center);
  for (int i = 0; i < check_resolution; ++i)
    for (int j = 0; j < check_resolution; ++j) {
      const Vec2 p = cell_center(section.domain(), check_resolution, check_resolution, i, j);
      if (!section.active(p[0], p[1])) continue;
      if (!(dot(section.jet(p[0], p[1]).line.u, c) > 0.0))
        throw DomainError("section '" + section.id() +
                          "' is not contained in the open hemisphere about the twist centre");
    }
  if (strength == 0.0) return section;
  LineSection::Eval base = section.evaluator();
  LineSection::Eval eval = [base, strength, c](double s, double t) {
    SectionJet j = base(s, t);
    j.line.V = j.line.V + strength * cross(j.line.u, c);
    for (int a = 0; a < 2; ++a) j.dV[a] = j.dV[a] + strength * cross(j.du[a], c);
    return j;
  };
  LineSection out(section.id() + "-twisted", section.domain(), std::move(eval),
                  section.active_predicate());
  out.warnings = section.warnings;
  return out;
}

double twist_threshold(const LineSection& section, const Vec3<double>& center, int ns, int nt) {
  const Vec3<double> c = normalized(center);
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nt; ++j) {
      const Vec2 p = cell_center(section.domain(), ns, nt, i, j);
      if (!section.active(p[0], p[1])) continue;
      const SectionJet jet = section.jet(p[0], p[1]);
      const double cu = dot(jet.line.u, c);
      if (!(cu > 0.0)) throw DomainError("sample outside the open hemisphere about the centre");
      const PlaneGraph pg = plane_graph(jet, reference_frame(jet.line.u));
      worst = std::max(worst, (std::abs(pg.psi) + pg.b) / cu);
    }
  return worst;
}

double definiteness_margin(const LineSection& section, int ns, int nt) {
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nt; ++j) {
      const Vec2 p = cell_center(section.domain(), ns, nt, i, j);
      if (!section.active(p[0], p[1])) continue;
      const auto x = du_orthonormal(section.jet(p[0], p[1]));
      Eigen::Matrix2d g;
      g << neutral_metric(x[0], x[0]), neutral_metric(x[0], x[1]), neutral_metric(x[1], x[0]),
          neutral_metric(x[1], x[1]);
      g = 0.5 * (g + g.transpose()).eval();
      worst = std::min(worst, Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(g).eigenvalues()[0]);
    }
  return worst;
}

void write_section_table(std::ostream& out, const LineSection& section, int ns, int nt) {
  const ParamDomain& d = section.domain();
  out << "# line section " << section.id() << '\n';
  out << "# grid " << ns << ' ' << nt << ' ' << num(d.s0) << ' ' << num(d.s1) << ' ' << num(d.t0)
      << ' ' << num(d.t1) << ' ' << d.periodic_s << ' ' << d.periodic_t << '\n';
  out << "u_x,u_y,u_z,V_x,V_y,V_z\n";
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nt; ++j) {
      const Vec2 p = cell_center(d, ns, nt, i, j);
      if (!section.active(p[0], p[1])) {
        out << "nan,nan,nan,nan,nan,nan\n";
        continue;
      }
      const OrientedLine l = section.jet(p[0], p[1]).line;
      out << num(l.u[0]) << ',' << num(l.u[1]) << ',' << num(l.u[2]) << ',' << num(l.V[0]) << ','
          << num(l.V[1]) << ',' << num(l.V[2]) << '\n';
    }
}

SectionTable read_section_table(std::istream& in) {
  SectionTable t;
  std::string line;
  bool have_grid = false, have_columns = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream h(line.substr(1));
      std::string key;
      h >> key;
      if (key == "grid") {
        int ps = 0, pt = 0;
        if (!(h >> t.ns >> t.nt >> t.domain.s0 >> t.domain.s1 >> t.domain.t0 >> t.domain.t1 >> ps >> pt))
          throw ParseError("malformed grid header: " + line);
        t.domain.periodic_s = ps != 0;
        t.domain.periodic_t = pt != 0;
        have_grid = true;
      }
      continue;
    }
    if (!have_columns) {
      if (line != "u_x,u_y,u_z,V_x,V_y,V_z") throw ParseError("unexpected column header: " + line);
      have_columns = true;
      continue;
    }
    std::istringstream row(line);
    std::array<double, 6> v{};
    for (int k = 0; k < 6; ++k) {
      std::string cell;
      if (!std::getline(row, cell, ',')) throw ParseError("short row: " + line);
      try {
        v[k] = std::stod(cell);
      } catch (const std::exception&) {
        throw ParseError("bad number '" + cell + "' in row: " + line);
      }
    }
    t.lines.push_back({{v[0], v[1], v[2]}, {v[3], v[4], v[5]}});
  }
  if (!have_grid || !have_columns) throw ParseError("missing grid or column header");
  if (t.lines.size() != static_cast<std::size_t>(t.ns) * t.nt)
    throw ParseError("row count does not match the grid header");
  return t;
}

}  // namespace ngeo
