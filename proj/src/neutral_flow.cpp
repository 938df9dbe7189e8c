#include "ngeo/neutral_flow.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "ngeo/chart_tensor.hpp"
#include "ngeo/error.hpp"
#include "ngeo/format.hpp"

namespace ngeo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Inverse stereographic direction and its coordinate derivatives.
template <class T>
void stereo(const T& X, const T& Y, Vec3<T>& u, Vec3<T>& uX, Vec3<T>& uY) {
  const T inv = 1.0 / (1.0 + X * X + Y * Y);
  const T inv2 = inv * inv;
  u = {2.0 * X * inv, 2.0 * Y * inv, (1.0 - X * X - Y * Y) * inv};
  uX = {2.0 * inv - 4.0 * X * X * inv2, -4.0 * X * Y * inv2, -4.0 * X * inv2};
  uY = {-4.0 * X * Y * inv2, 2.0 * inv - 4.0 * Y * Y * inv2, -4.0 * Y * inv2};
}

template <class T>
void line_of(const std::array<T, 4>& q, Vec3<T>& u, Vec3<T>& V) {
  Vec3<T> uX, uY;
  stereo(q[0], q[1], u, uX, uY);
  V = q[2] * uX + q[3] * uY;
}

// G(X, Y) = -dV_X . (u x du_Y) - dV_Y . (u x du_X).
template <class T>
T neutral_form(const Vec3<T>& u, const Vec3<T>& dux, const Vec3<T>& dVx, const Vec3<T>& duy,
               const Vec3<T>& dVy) {
  return -(dot(dVx, cross(u, duy)) + dot(dVy, cross(u, dux)));
}

// Columns: d(u, V)/dq_i.
Eigen::Matrix<double, 6, 4> coordinate_frame(const Vec4& q) {
  std::array<D1<4>, 4> x;
  for (int i = 0; i < 4; ++i) x[i] = variable1<4>(q[i], i);
  Vec3<D1<4>> u, V;
  line_of(x, u, V);
  Eigen::Matrix<double, 6, 4> a;
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 3; ++k) {
      a(k, i) = u[k].d[i];
      a(k + 3, i) = V[k].d[i];
    }
  return a;
}

struct MetricJet4 {
  Eigen::Matrix4d g;
  std::array<Eigen::Matrix4d, 4> gamma;
};

MetricJet4 metric_jet(const Vec4& q) {
  std::array<D2<4>, 4> x;
  for (int i = 0; i < 4; ++i) x[i] = variable2<4>(q[i], i);
  Vec3<D2<4>> u, V;
  line_of(x, u, V);
  Vec3<D1<4>> u1;
  std::array<Vec3<D1<4>>, 4> du, dV;
  for (int k = 0; k < 3; ++k) {
    u1[k] = u[k].v;
    for (int i = 0; i < 4; ++i) {
      du[i][k] = u[k].d[i];
      dV[i][k] = V[k].d[i];
    }
  }
  MatN<double, 4> g{};
  std::array<MatN<double, 4>, 4> dg{};
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) {
      const D1<4> v = neutral_form(u1, du[i], dV[i], du[j], dV[j]);
      g[i][j] = g[j][i] = v.v;
      for (int k = 0; k < 4; ++k) dg[k][i][j] = dg[k][j][i] = v.d[k];
    }
  const auto gamma = christoffel_from<4>(g, dg);
  MetricJet4 out;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      out.g(i, j) = g[i][j];
      for (int k = 0; k < 4; ++k) out.gamma[k](i, j) = gamma[k][i][j];
    }
  return out;
}

double gdot(const Eigen::Matrix4d& g, const Vec4& a, const Vec4& b) { return a.dot(g * b); }

// Coordinates of J applied to the coordinate displacement dq.
Vec4 apply_j_coords(const Vec4& q, const Vec4& dq) {
  const Eigen::Matrix<double, 6, 4> a = coordinate_frame(q);
  const LineTangent jt = apply_j(tangent_at(q, dq));
  Eigen::Matrix<double, 6, 1> x;
  x << jt.du[0], jt.du[1], jt.du[2], jt.dV[0], jt.dV[1], jt.dV[2];
  return a.colPivHouseholderQr().solve(x);
}

}  // namespace

OrientedLine line_at(const Vec4& q) {
  Vec3<double> u, V;
  line_of(std::array<double, 4>{q[0], q[1], q[2], q[3]}, u, V);
  return {u, V};
}

LineTangent tangent_at(const Vec4& q, const Vec4& dq) {
  const Eigen::Matrix<double, 6, 4> a = coordinate_frame(q);
  const Eigen::Matrix<double, 6, 1> x = a * dq;
  return {line_at(q), {x[0], x[1], x[2]}, {x[3], x[4], x[5]}};
}

Eigen::Matrix4d flow_metric(const Vec4& q) {
  std::array<D1<4>, 4> x;
  for (int i = 0; i < 4; ++i) x[i] = variable1<4>(q[i], i);
  Vec3<D1<4>> u, V;
  line_of(x, u, V);
  const Vec3<double> u0 = values(u);
  std::array<Vec3<double>, 4> du, dV;
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 3; ++k) {
      du[i][k] = u[k].d[i];
      dV[i][k] = V[k].d[i];
    }
  Eigen::Matrix4d g;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) g(i, j) = neutral_form(u0, du[i], dV[i], du[j], dV[j]);
  return g;
}

std::array<Eigen::Matrix4d, 4> flow_christoffel(const Vec4& q) { return metric_jet(q).gamma; }

FiberSection::FiberSection(std::string id, Foot foot, double twist)
    : id_(std::move(id)), foot_(std::move(foot)), twist_(twist) {}

namespace {

std::pair<Vec2, Eigen::Matrix2d> eta_jet(const FiberSection::Foot& foot, double twist, Vec2 xi) {
  const D1<2> X = variable1<2>(xi[0], 0), Y = variable1<2>(xi[1], 1);
  Vec3<D1<2>> u, uX, uY;
  stereo(X, Y, u, uX, uY);
  const Vec3<D1<2>> z{D1<2>(0.0), D1<2>(0.0), D1<2>(1.0)};
  const Vec3<D1<2>> V = reject(foot(u), u) + twist * cross(u, z);
  const D1<2> r2 = X * X + Y * Y;
  const D1<2> scale = 0.25 * (1.0 + r2) * (1.0 + r2);
  const D1<2> e1 = scale * dot(uX, V), e2 = scale * dot(uY, V);
  Eigen::Matrix2d d;
  d << e1.d[0], e1.d[1], e2.d[0], e2.d[1];
  return {{e1.v, e2.v}, d};
}

}  // namespace

Vec2 FiberSection::eta(Vec2 xi) const { return eta_jet(foot_, twist_, xi).first; }

Eigen::Matrix2d FiberSection::d_eta(Vec2 xi) const { return eta_jet(foot_, twist_, xi).second; }

Vec4 FiberSection::point(Vec2 xi) const {
  const Vec2 e = eta(xi);
  return {xi[0], xi[1], e[0], e[1]};
}

LineSection FiberSection::as_line_section(double radius) const {
  const Foot foot = foot_;
  const double s = twist_;
  return hemisphere_section(
      id_, [foot, s](const Vec3<D1<2>>& u) {
        const Vec3<D1<2>> z{D1<2>(0.0), D1<2>(0.0), D1<2>(1.0)};
        return reject(foot(u), u) + s * cross(u, z);
      },
      radius);
}

Vec4 FiberSection::project(const Vec4& q, int iterations) const {
  Eigen::Vector2d xi(q[0], q[1]);
  const Eigen::Vector2d eta0(q[2], q[3]);
  for (int k = 0; k < iterations; ++k) {
    const auto [e, d] = eta_jet(foot_, twist_, {xi[0], xi[1]});
    const Eigen::Vector2d r = Eigen::Vector2d(e[0], e[1]) - eta0;
    const Eigen::Vector2d grad = (xi - Eigen::Vector2d(q[0], q[1])) + d.transpose() * r;
    const Eigen::Matrix2d hess = Eigen::Matrix2d::Identity() + d.transpose() * d;
    xi -= hess.ldlt().solve(grad);
  }
  if (!(xi.norm() < 1.0))
    throw ProjectionError("boundary sample left the hemisphere (|xi| = " + num(xi.norm()) + ")");
  return point({xi[0], xi[1]});
}

FiberSection ellipsoid_fiber_section(double a, double b, double c, double twist) {
  if (!(a > 0 && b > 0 && c > 0)) throw ParameterError("ellipsoid semi-axes must be positive");
  return FiberSection("ellipsoid", [a, b, c](const Vec3<D1<2>>& u) { return ellipsoid_foot(u, a, b, c); },
                      twist);
}

FiberSection zero_fiber_section(double twist) {
  return FiberSection("zero", [](const Vec3<D1<2>>&) { return Vec3<D1<2>>{}; }, twist);
}

FlowState initial_disc(std::shared_ptr<const FiberSection> target, int n, double half_width,
                       const Vec2& bump) {
  if (n < 5) throw ParameterError("flow grid needs at least 5 samples per side");
  if (!(half_width > 0.0 && half_width * std::sqrt(2.0) < 1.0))
    throw ParameterError("flow square must lie inside the open hemisphere (half width < 1/sqrt 2)");
  FlowState s;
  s.n = n;
  s.half_width = half_width;
  s.target = std::move(target);
  s.q.resize(static_cast<std::size_t>(n) * n);
  const double dx = s.dx();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x = -half_width + i * dx, y = -half_width + j * dx;
      Vec4 q = s.target->point({x, y});
      const double w = (1.0 - x * x / (half_width * half_width)) * (1.0 - y * y / (half_width * half_width));
      if (!s.boundary(i, j)) {
        q[2] += bump[0] * w;
        q[3] += bump[1] * w;
      }
      s.at(i, j) = q;
    }
  return s;
}

namespace {

struct NodeGeometry {
  Vec4 fx, fy;
  Eigen::Matrix2d g;
};

NodeGeometry interior_geometry(const FlowState& s, int i, int j, const Eigen::Matrix4d& G) {
  const double dx = s.dx();
  NodeGeometry ng;
  ng.fx = (s.at(i + 1, j) - s.at(i - 1, j)) / (2 * dx);
  ng.fy = (s.at(i, j + 1) - s.at(i, j - 1)) / (2 * dx);
  ng.g << gdot(G, ng.fx, ng.fx), gdot(G, ng.fx, ng.fy), gdot(G, ng.fy, ng.fx), gdot(G, ng.fy, ng.fy);
  return ng;
}

double min_eig(const Eigen::Matrix2d& g) {
  const double tr = 0.5 * (g(0, 0) + g(1, 1));
  const double d = std::hypot(0.5 * (g(0, 0) - g(1, 1)), 0.5 * (g(0, 1) + g(1, 0)));
  return tr - d;
}

}  // namespace

MeanCurvatureField mean_curvature_vector(const FlowState& s) {
  const int n = s.n;
  const double dx = s.dx();
  MeanCurvatureField out;
  out.h.assign(s.q.size(), Vec4::Zero());
  std::vector<double> hmax(n, 0.0), resid(n, 0.0), margin(n, std::numeric_limits<double>::infinity());
  for_each_index(s.params.exec, n - 2, [&](int r) {
    const int i = r + 1;
    for (int j = 1; j < n - 1; ++j) {
      const MetricJet4 mj = metric_jet(s.at(i, j));
      const NodeGeometry ng = interior_geometry(s, i, j, mj.g);
      margin[i] = std::min(margin[i], min_eig(ng.g));
      if (!(min_eig(ng.g) > 0.0)) continue;
      const Vec4 c = s.at(i, j);
      const Vec4 fxx = (s.at(i + 1, j) - 2 * c + s.at(i - 1, j)) / (dx * dx);
      const Vec4 fyy = (s.at(i, j + 1) - 2 * c + s.at(i, j - 1)) / (dx * dx);
      const Vec4 fxy = (s.at(i + 1, j + 1) - s.at(i + 1, j - 1) - s.at(i - 1, j + 1) + s.at(i - 1, j - 1)) /
                       (4 * dx * dx);
      const Eigen::Matrix2d gi = ng.g.inverse();
      auto accel = [&](const Vec4& d2, const Vec4& a, const Vec4& b) {
        Vec4 v = d2;
        for (int k = 0; k < 4; ++k) v[k] += a.dot(mj.gamma[k] * b);
        return v;
      };
      const Vec4 raw = gi(0, 0) * accel(fxx, ng.fx, ng.fx) + 2 * gi(0, 1) * accel(fxy, ng.fx, ng.fy) +
                       gi(1, 1) * accel(fyy, ng.fy, ng.fy);
      const std::array<Vec4, 2> f{ng.fx, ng.fy};
      Vec4 h = raw;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) h -= gi(a, b) * gdot(mj.g, f[a], raw) * f[b];
      out.h[static_cast<std::size_t>(i) * n + j] = h;
      hmax[i] = std::max(hmax[i], std::sqrt(std::abs(gdot(mj.g, h, h))));
      for (int a = 0; a < 2; ++a)
        resid[i] = std::max(resid[i], std::abs(gdot(mj.g, h, f[a])) / std::sqrt(ng.g(a, a)));
    }
  });
  out.margin = *std::min_element(margin.begin() + 1, margin.end() - 1);
  out.max_norm = *std::max_element(hmax.begin(), hmax.end());
  out.normal_residual = *std::max_element(resid.begin(), resid.end());
  if (!(out.margin > 0.0))
    throw SignatureLossError("induced metric is not definite (margin " + num(out.margin) + ")");
  return out;
}

double induced_area(const FlowState& s) {
  const int n = s.n;
  const double dx = s.dx();
  std::vector<double> rows(n - 1, 0.0);
  for_each_index(s.params.exec, n - 1, [&](int i) {
    std::vector<double> cells(n - 1);
    for (int j = 0; j < n - 1; ++j) {
      const Vec4 &a = s.at(i, j), &b = s.at(i + 1, j), &c = s.at(i, j + 1), &d = s.at(i + 1, j + 1);
      const Vec4 fx = ((b - a) + (d - c)) / (2 * dx);
      const Vec4 fy = ((c - a) + (d - b)) / (2 * dx);
      const Eigen::Matrix4d G = flow_metric(0.25 * (a + b + c + d));
      const double det = gdot(G, fx, fx) * gdot(G, fy, fy) - std::pow(gdot(G, fx, fy), 2);
      cells[j] = std::sqrt(std::abs(det)) * dx * dx;
    }
    rows[i] = pairwise_sum(cells);
  });
  return pairwise_sum(rows);
}

double stable_step(const FlowState& s, double cfl) {
  double lo = std::numeric_limits<double>::infinity();
  for (int i = 1; i < s.n - 1; ++i)
    for (int j = 1; j < s.n - 1; ++j)
      lo = std::min(lo, min_eig(interior_geometry(s, i, j, flow_metric(s.at(i, j))).g));
  if (!(lo > 0.0)) throw SignatureLossError("induced metric is not definite");
  return cfl * s.dx() * s.dx() * lo;
}

namespace {

// Boundary sample geometry: along-side and inward parameter steps.
struct Side {
  int ti, tj;  // along the side
  int ni, nj;  // inward
};

std::optional<Side> side_of(const FlowState& s, int i, int j) {
  const int m = s.n - 1;
  const bool corner = (i == 0 || i == m) && (j == 0 || j == m);
  if (corner) return std::nullopt;
  if (i == 0) return Side{0, 1, 1, 0};
  if (i == m) return Side{0, 1, -1, 0};
  if (j == 0) return Side{1, 0, 0, 1};
  if (j == m) return Side{1, 0, 0, -1};
  return std::nullopt;
}

struct AngleSample {
  double cosh_b = kNaN;  // |G(e2, f2)|
  double dbar = kNaN;
};

// Hyperbolic angle between the disc and the target along the boundary at
// (i, j). `node` overrides the position of that sample.
AngleSample angle_at(const FlowState& s, int i, int j, const Side& sd, const Vec4& node) {
  const double dx = s.dx();
  auto q = [&](int a, int b) -> Vec4 { return (a == i && b == j) ? node : s.at(a, b); };
  const Eigen::Matrix4d G = flow_metric(node);
  const Vec4 e1 = (q(i + sd.ti, j + sd.tj) - q(i - sd.ti, j - sd.tj)) / (2 * dx);
  const Vec4 fn = (-3 * node + 4 * q(i + sd.ni, j + sd.nj) - q(i + 2 * sd.ni, j + 2 * sd.nj)) / (2 * dx);
  const double g11 = gdot(G, e1, e1);
  if (!(g11 > 0.0)) return {};
  const Vec4 e1u = e1 / std::sqrt(g11);
  Vec4 e2 = fn - gdot(G, fn, e1u) * e1u;
  const double g22 = gdot(G, e2, e2);
  if (!(g22 > 0.0)) return {};
  e2 /= std::sqrt(g22);

  const Eigen::Matrix2d d = s.target->d_eta({node[0], node[1]});
  const Vec4 t1(1, 0, d(0, 0), d(1, 0)), t2(0, 1, d(0, 1), d(1, 1));
  Vec4 f = gdot(G, t2, e1u) * t1 - gdot(G, t1, e1u) * t2;
  const double gff = gdot(G, f, f);
  if (!(gff > 0.0)) return {};
  f /= std::sqrt(gff);

  AngleSample out;
  out.cosh_b = std::abs(gdot(G, e2, f));
  const Vec4 je1 = apply_j_coords(node, e1u);
  const Vec4 nrm = je1 - gdot(G, je1, e1u) * e1u - gdot(G, je1, e2) * e2;
  out.dbar = std::sqrt(std::abs(gdot(G, nrm, nrm)));
  return out;
}

struct PenaltyMove {
  int i, j;
  Vec4 q0, step;
  double delta;
};

// Damped Newton moves of each boundary sample along the target surface, in
// the outward parameter direction, on cosh(B_measured) - cosh(B).
std::vector<PenaltyMove> penalty_moves(const FlowState& s, double weight) {
  const double target = std::cosh(s.params.angle_target);
  const double dx = s.dx();
  const double eps = 1e-5 * dx;
  std::vector<PenaltyMove> moves;
  for (int i = 0; i < s.n; ++i)
    for (int j = 0; j < s.n; ++j) {
      if (!s.boundary(i, j)) continue;
      const auto sd = side_of(s, i, j);
      if (!sd) continue;
      const Vec4 q0 = s.at(i, j);
      const Eigen::Matrix2d d = s.target->d_eta({q0[0], q0[1]});
      const Eigen::Vector2d dir(-sd->ni, -sd->nj);
      const Eigen::Vector2d de = d * dir;
      const Vec4 step(dir[0], dir[1], de[0], de[1]);
      const AngleSample a0 = angle_at(s, i, j, *sd, q0);
      const AngleSample a1 = angle_at(s, i, j, *sd, q0 + eps * step);
      if (!std::isfinite(a0.cosh_b) || !std::isfinite(a1.cosh_b)) continue;
      const double r = a0.cosh_b - target;
      // Slope per grid cell; the step vanishes where the residual is flat.
      const double slope = (a1.cosh_b - a0.cosh_b) / eps * dx;
      const double delta = std::clamp(-weight * r * slope / (slope * slope + 1e-6), -0.25, 0.25) * dx;
      if (delta != 0.0) moves.push_back({i, j, q0, step, delta});
    }
  return moves;
}

FlowState apply_moves(const FlowState& s, const std::vector<PenaltyMove>& moves, double scale) {
  FlowState out = s;
  for (const auto& m : moves)
    out.at(m.i, m.j) = s.target->project(m.q0 + scale * m.delta * m.step, s.params.projection_iterations);
  return out;
}

// One penalty iteration, backtracked on the max boundary angle residual.
// Returns false when no scaled step reduces it.
bool penalty_iteration(FlowState& s, double weight) {
  const auto moves = penalty_moves(s, weight);
  if (moves.empty()) return false;
  const double r0 = boundary_angles(s).angle_residual;
  double scale = 1.0;
  for (int k = 0; k < 6; ++k, scale *= 0.5) {
    FlowState trial = apply_moves(s, moves, scale);
    if (boundary_angles(trial).angle_residual < r0) {
      s = std::move(trial);
      return true;
    }
  }
  return false;
}

}  // namespace

BoundaryAngles boundary_angles(const FlowState& s) {
  BoundaryAngles out;
  out.measured.assign(s.q.size(), kNaN);
  for (int i = 0; i < s.n; ++i)
    for (int j = 0; j < s.n; ++j) {
      if (!s.boundary(i, j)) continue;
      const auto sd = side_of(s, i, j);
      if (!sd) continue;
      const AngleSample a = angle_at(s, i, j, *sd, s.at(i, j));
      const double b = std::acosh(std::max(1.0, a.cosh_b));
      out.measured[static_cast<std::size_t>(i) * s.n + j] = b;
      out.angle_residual = std::max(out.angle_residual, std::abs(b - s.params.angle_target));
      out.dbar_norm = std::max(out.dbar_norm, a.dbar);
    }
  return out;
}

std::vector<double> angle_penalty_iterations(FlowState& state, int iterations, double weight) {
  std::vector<double> out;
  for (int k = 0; k < iterations; ++k) {
    penalty_iteration(state, weight);
    out.push_back(boundary_angles(state).angle_residual);
  }
  return out;
}

namespace {

FlowDiagnostics diagnose(const FlowState& s, int step, int backtracks) {
  const MeanCurvatureField mh = mean_curvature_vector(s);
  const BoundaryAngles ba = boundary_angles(s);
  FlowDiagnostics d;
  d.step = step;
  d.t = s.t;
  d.h = s.h;
  d.area = induced_area(s);
  d.margin = mh.margin;
  d.angle_residual = ba.angle_residual;
  d.dbar_norm = ba.dbar_norm;
  d.dbar_target = s.params.holo_constant / (1.0 + s.t);
  d.dbar_violation = d.dbar_norm > d.dbar_target;
  d.max_h = mh.max_norm;
  d.normal_residual = mh.normal_residual;
  d.backtracks = backtracks;
  return d;
}

}  // namespace

FlowState flow_step(const FlowState& state) {
  if (!(state.h > 0.0)) throw ParameterError("flow step h must be positive");
  const MeanCurvatureField mh = mean_curvature_vector(state);
  FlowState next = state;
  for (std::size_t k = 0; k < next.q.size(); ++k) next.q[k] += state.h * mh.h[k];

  int backtracks = 0;
  if (state.params.penalty) {
    const double base_area = state.params.area_safeguard ? induced_area(state) : 0.0;
    double w = state.params.penalty_weight;
    for (int attempt = 0; attempt < 8; ++attempt, w *= 0.5) {
      FlowState trial = next;
      if (!penalty_iteration(trial, w)) break;
      if (!state.params.area_safeguard || induced_area(trial) >= base_area) {
        next = std::move(trial);
        break;
      }
      ++backtracks;
    }
  }
  for (int i = 0; i < next.n; ++i)
    for (int j = 0; j < next.n; ++j)
      if (next.boundary(i, j)) next.at(i, j) = next.target->project(next.at(i, j), next.params.projection_iterations);

  next.t = state.t + state.h;
  const int step = state.history.empty() ? 1 : state.history.back().step + 1;
  next.history.push_back(diagnose(next, step, backtracks));
  return next;
}

namespace {

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "grid", "half_width", "h", "cfl", "steps", "angle_target", "holo_constant", "twist",
      "section", "a", "b", "c", "initial", "perturbation", "penalty_weight", "penalty",
      "area_safeguard", "stagnation_tol", "snapshot_every"};
  return keys;
}

}  // namespace

FlowConfig parse_flow_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("flow config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("flow config must be a JSON object");
  const auto& keys = config_keys();
  for (const auto& [k, v] : j.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      std::string valid;
      for (const auto& s : keys) valid += (valid.empty() ? "" : ", ") + s;
      throw ConfigError("unknown flow config key '" + k + "' (valid: " + valid + ")");
    }
  FlowConfig c;
  auto get = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(std::string("flow config field '") + key + "' has the wrong type");
    }
  };
  get("grid", c.grid);
  get("half_width", c.half_width);
  get("h", c.h);
  get("cfl", c.cfl);
  get("steps", c.steps);
  get("angle_target", c.angle_target);
  get("holo_constant", c.holo_constant);
  get("twist", c.twist);
  get("section", c.section);
  get("a", c.a);
  get("b", c.b);
  get("c", c.c);
  get("initial", c.initial);
  get("perturbation", c.perturbation);
  get("penalty_weight", c.penalty_weight);
  get("penalty", c.penalty);
  get("area_safeguard", c.area_safeguard);
  get("stagnation_tol", c.stagnation_tol);
  get("snapshot_every", c.snapshot_every);

  if (c.grid < 5) throw ConfigError("flow config field 'grid' must be at least 5");
  if (!(c.half_width > 0.0 && c.half_width * std::sqrt(2.0) < 1.0))
    throw ConfigError("flow config field 'half_width' must lie in (0, 1/sqrt 2)");
  if (c.h < 0.0) throw ConfigError("flow config field 'h' must be >= 0");
  if (!(c.cfl > 0.0 && c.cfl <= 0.25)) throw ConfigError("flow config field 'cfl' must lie in (0, 0.25]");
  if (c.steps < 0) throw ConfigError("flow config field 'steps' must be >= 0");
  if (c.angle_target < 0.0) throw ConfigError("flow config field 'angle_target' must be >= 0");
  if (!(c.holo_constant > 0.0)) throw ConfigError("flow config field 'holo_constant' must be > 0");
  if (c.twist < 0.0) throw ConfigError("flow config field 'twist' must be >= 0");
  if (c.section != "ellipsoid" && c.section != "zero")
    throw ConfigError("flow config field 'section' must be 'ellipsoid' or 'zero'");
  if (c.initial != "section" && c.initial != "perturbed")
    throw ConfigError("flow config field 'initial' must be 'section' or 'perturbed'");
  if (c.snapshot_every < 0) throw ConfigError("flow config field 'snapshot_every' must be >= 0");
  return c;
}

FlowConfig load_flow_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open flow config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_flow_config(ss.str());
}

FlowRun run_flow(FlowState state, int steps, double stagnation_tol, int snapshot_every) {
  FlowRun run;
  if (state.history.empty()) state.history.push_back(diagnose(state, 0, 0));
  run.termination = "budget";
  for (int k = 0; k < steps; ++k) {
    if (state.history.back().max_h < stagnation_tol) {
      run.termination = "stagnation";
      break;
    }
    try {
      state = flow_step(state);
    } catch (const SignatureLossError& e) {
      run.termination = "signature-loss";
      run.error = e.what();
      break;
    } catch (const ProjectionError& e) {
      run.termination = "projection-failure";
      run.error = e.what();
      break;
    }
    if (snapshot_every > 0 && (k + 1) % snapshot_every == 0) run.snapshots.push_back(state);
  }
  run.state = std::move(state);
  return run;
}

FlowRun run_flow(const FlowConfig& c) {
  auto make = [&](double twist) {
    return c.section == "zero" ? zero_fiber_section(twist) : ellipsoid_fiber_section(c.a, c.b, c.c, twist);
  };
  double twist = c.twist;
  if (twist == 0.0) {
    const double radius = std::min(0.99, 1.01 * c.half_width * std::sqrt(2.0));
    const double thr = twist_threshold(make(0.0).as_line_section(radius), {0, 0, 1}, 96, 96);
    twist = std::max(1.5 * thr, 1.0);
  }
  auto target = std::make_shared<const FiberSection>(make(twist));
  const Vec2 bump = c.initial == "perturbed" ? Vec2{c.perturbation, -0.5 * c.perturbation} : Vec2{0, 0};
  FlowState s = initial_disc(target, c.grid, c.half_width, bump);
  s.params.angle_target = c.angle_target;
  s.params.holo_constant = c.holo_constant;
  s.params.penalty_weight = c.penalty_weight;
  s.params.penalty = c.penalty;
  s.params.area_safeguard = c.area_safeguard;
  const double cap = stable_step(s, c.cfl);
  if (c.h > 0.0 && c.h > stable_step(s, 0.25))
    throw ConfigError("flow config field 'h' exceeds the stable explicit step " + num(stable_step(s, 0.25)));
  s.h = c.h > 0.0 ? c.h : cap;
  return run_flow(std::move(s), c.steps, c.stagnation_tol, c.snapshot_every);
}

void write_flow_csv(std::ostream& out, const std::vector<FlowDiagnostics>& history) {
  out << "step,t,h,area,margin,angle_residual,dbar_norm,dbar_target,dbar_violation,max_H,"
         "normal_residual,backtracks\n";
  for (const auto& d : history)
    out << d.step << ',' << num(d.t) << ',' << num(d.h) << ',' << num(d.area) << ',' << num(d.margin)
        << ',' << num(d.angle_residual) << ',' << num(d.dbar_norm) << ',' << num(d.dbar_target) << ','
        << (d.dbar_violation ? 1 : 0) << ',' << num(d.max_h) << ',' << num(d.normal_residual) << ','
        << d.backtracks << '\n';
}

void write_flow_snapshot(std::ostream& out, const FlowState& s) {
  out << "i,j,X,Y,eta1,eta2\n";
  for (int i = 0; i < s.n; ++i)
    for (int j = 0; j < s.n; ++j) {
      const Vec4& q = s.at(i, j);
      out << i << ',' << j << ',' << num(q[0]) << ',' << num(q[1]) << ',' << num(q[2]) << ',' << num(q[3])
          << '\n';
    }
}

}  // namespace ngeo
