#pragma once

// Explicit mean curvature flow of graphical discs in the space of oriented
// lines with the neutral metric G. Coordinates q = (X, Y, eta1, eta2): the
// direction u is the inverse stereographic image of xi = (X, Y) (upper
// hemisphere for |xi| < 1) and the foot is V = eta1 u_X + eta2 u_Y.

#include <Eigen/Core>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "ngeo/line_space.hpp"

namespace ngeo {

using Vec4 = Eigen::Vector4d;

OrientedLine line_at(const Vec4& q);
/// Line-space tangent of the coordinate displacement dq at q.
LineTangent tangent_at(const Vec4& q, const Vec4& dq);
/// G in flow coordinates.
Eigen::Matrix4d flow_metric(const Vec4& q);
/// Christoffel symbols of G in flow coordinates, gamma[k](i, j).
std::array<Eigen::Matrix4d, 4> flow_christoffel(const Vec4& q);

/// A section written as a graph eta = sigma(xi) over the stereographic disc,
/// optionally twisted by V -> V + s (u x z).
class FiberSection {
 public:
  using Foot = std::function<Vec3<D1<2>>(const Vec3<D1<2>>&)>;

  FiberSection(std::string id, Foot foot, double twist);

  const std::string& id() const { return id_; }
  double twist() const { return twist_; }
  Vec2 eta(Vec2 xi) const;
  /// d eta / d xi, column k is the derivative along xi_k.
  Eigen::Matrix2d d_eta(Vec2 xi) const;
  Vec4 point(Vec2 xi) const;
  /// The same section as a LineSection over |xi| < radius.
  LineSection as_line_section(double radius) const;
  /// Closest point on the graph in flow coordinates (Gauss-Newton).
  Vec4 project(const Vec4& q, int iterations = 3) const;

 private:
  std::string id_;
  Foot foot_;
  double twist_;
};

FiberSection ellipsoid_fiber_section(double a, double b, double c, double twist);
FiberSection zero_fiber_section(double twist);

struct FlowDiagnostics {
  int step = 0;
  double t = 0.0;
  double h = 0.0;
  double area = 0.0;
  double margin = 0.0;          ///< min eigenvalue of the induced Gram matrices
  double angle_residual = 0.0;  ///< max |B_measured - B| along the boundary
  double dbar_norm = 0.0;       ///< max G-norm of the normal part of J e1
  double dbar_target = 0.0;     ///< C / (1 + t)
  bool dbar_violation = false;
  double max_h = 0.0;           ///< max sqrt(|G(H, H)|)
  double normal_residual = 0.0; ///< max |G(H, F_a)| / |F_a|
  int backtracks = 0;           ///< penalty halvings by the area safeguard
};

struct FlowParams {
  double angle_target = 0.0;       ///< B
  double holo_constant = 1.0;      ///< C
  double penalty_weight = 0.5;
  bool penalty = true;
  bool area_safeguard = true;
  int projection_iterations = 3;
  Execution exec = Execution::Parallel;
};

/// Disc sampled on an n x n raster over the parameter square [-w, w]^2;
/// boundary samples are the outer ring.
struct FlowState {
  int n = 0;
  double half_width = 0.0;
  std::vector<Vec4> q;  ///< index i * n + j, i along the first axis
  double t = 0.0;
  double h = 0.0;
  std::shared_ptr<const FiberSection> target;
  FlowParams params;
  std::vector<FlowDiagnostics> history;

  double dx() const { return 2.0 * half_width / (n - 1); }
  Vec4& at(int i, int j) { return q[static_cast<std::size_t>(i) * n + j]; }
  const Vec4& at(int i, int j) const { return q[static_cast<std::size_t>(i) * n + j]; }
  bool boundary(int i, int j) const { return i == 0 || j == 0 || i == n - 1 || j == n - 1; }
};

/// D0 = graph of `target` over the parameter square, plus an optional
/// interior bump amplitude * (1 - x^2/w^2)(1 - y^2/w^2) added to eta.
FlowState initial_disc(std::shared_ptr<const FiberSection> target, int n, double half_width,
                       const Vec2& bump = {0.0, 0.0});

struct MeanCurvatureField {
  std::vector<Vec4> h;   ///< zero on the boundary ring
  double max_norm = 0.0;
  double normal_residual = 0.0;
  double margin = 0.0;
};

/// Throws SignatureLossError when an interior Gram matrix is not definite.
MeanCurvatureField mean_curvature_vector(const FlowState& state);
double induced_area(const FlowState& state);
/// Largest stable explicit step: cfl * dx^2 * min eigenvalue of the
/// parameter-space induced metric.
double stable_step(const FlowState& state, double cfl = 0.2);

struct BoundaryAngles {
  double angle_residual = 0.0;
  double dbar_norm = 0.0;
  std::vector<double> measured;  ///< hyperbolic angle per boundary sample, NaN at corners
};
BoundaryAngles boundary_angles(const FlowState& state);
/// Penalty moves of the boundary ring along the target toward the angle B,
/// with re-projection. Returns the residual after each iteration.
std::vector<double> angle_penalty_iterations(FlowState& state, int iterations, double weight);

/// Throws SignatureLossError or ProjectionError; the input is unchanged.
FlowState flow_step(const FlowState& state);

struct FlowConfig {
  int grid = 25;
  double half_width = 0.5;
  double h = 0.0;  ///< 0 selects stable_step
  double cfl = 0.2;
  int steps = 500;
  double angle_target = 0.1;
  double holo_constant = 1.0;
  double twist = 0.0;  ///< 0 selects 1.5 x the definiteness threshold
  std::string section = "ellipsoid";  ///< "ellipsoid" or "zero"
  double a = 2.0, b = 1.0, c = 1.5;
  std::string initial = "section";  ///< "section" or "perturbed"
  double perturbation = 0.05;
  double penalty_weight = 0.5;
  bool penalty = true;
  bool area_safeguard = true;
  double stagnation_tol = 1e-12;
  int snapshot_every = 0;
};

/// Key-value JSON document; unknown keys raise ConfigError listing the valid ones.
FlowConfig parse_flow_config(const std::string& json_text);
FlowConfig load_flow_config(const std::string& path);

struct FlowRun {
  FlowState state;
  std::string termination;  ///< "budget", "stagnation", "signature-loss", "projection-failure"
  std::string error;
  std::vector<FlowState> snapshots;
};

FlowRun run_flow(const FlowConfig& config);
/// Runs from a prepared state.
FlowRun run_flow(FlowState state, int steps, double stagnation_tol = 1e-12, int snapshot_every = 0);

void write_flow_csv(std::ostream& out, const std::vector<FlowDiagnostics>& history);
/// Rows i, j, X, Y, eta1, eta2.
void write_flow_snapshot(std::ostream& out, const FlowState& state);

}  // namespace ngeo
