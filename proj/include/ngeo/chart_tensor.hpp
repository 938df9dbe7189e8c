#pragma once

// Tensor calculus on 3-dimensional coordinate charts: metric families,
// exact first partials by forward-mode duals, Christoffel symbols, pointwise
// tensor norms and L2 distances between metrics.

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "ngeo/dual.hpp"
#include "ngeo/error.hpp"
#include "ngeo/parallel.hpp"
#include "ngeo/tensor.hpp"

namespace ngeo {

enum class ChartKind { Cartesian, Hopf };

struct ChartDescriptor {
  ChartKind kind = ChartKind::Cartesian;
  std::array<std::string, 3> names{"x", "y", "z"};
  std::array<double, 3> lower{};
  std::array<double, 3> upper{};
  std::array<bool, 3> periodic{};
  /// Open (strict) bounds on non-periodic axes, e.g. the Hopf rho range.
  bool open_bounds = false;

  static ChartDescriptor cartesian();
  static ChartDescriptor hopf();

  bool contains(const Vec3<double>& p) const;
  bool same_as(const ChartDescriptor& o) const { return kind == o.kind; }
};

struct ChartPoint {
  Vec3<double> coords{};
};

/// Metric components with all first partials: dg[k][i][j] = d_k g_ij.
struct MetricJet {
  Mat3<double> g{};
  std::array<Mat3<double>, 3> dg{};
};

/// Christoffel symbols of the second kind: gamma[k][i][j] = Gamma^k_ij.
using Christoffel3 = std::array<Mat3<double>, 3>;

/// Smooth symmetric 2-tensor field on a chart. The evaluator is written once
/// over first-order duals; values and exact partials come from one call.
class MetricField {
 public:
  using Jet = D1<3>;
  using Evaluator = std::function<Mat3<Jet>(const Vec3<Jet>&)>;

  MetricField(std::string id, ChartDescriptor chart, Evaluator eval,
              std::map<std::string, double> params = {},
              std::array<std::vector<double>, 3> breakpoints = {});

  const std::string& id() const { return id_; }
  const ChartDescriptor& chart() const { return chart_; }
  const std::map<std::string, double>& params() const { return params_; }
  /// Coordinates where the components are smooth but change regime (bump
  /// transitions); quadrature panels are split there.
  const std::array<std::vector<double>, 3>& breakpoints() const { return breakpoints_; }

  /// g_ij(p). Throws DomainError outside the chart.
  Mat3<double> components(const ChartPoint& p) const;
  MetricJet jet(const ChartPoint& p) const;

 private:
  std::string id_;
  ChartDescriptor chart_;
  Evaluator eval_;
  std::map<std::string, double> params_;
  std::array<std::vector<double>, 3> breakpoints_;
};

/// The smooth cutoff Psi: 1 within eps/4 of pi/4, 0 beyond eps/2, joined by
/// an exp(-1/x) smooth step.
struct BumpProfile {
  double eps = 0.0;

  template <class T>
  T operator()(const T& rho) const {
    const double center = std::numbers::pi / 4.0;
    const double d = std::abs(value_of(rho) - center);
    if (d <= eps / 4.0) return T(1.0);
    if (d >= eps / 2.0) return T(0.0);
    using std::abs;
    const T dist = abs(rho - center);
    return smooth_step((eps / 2.0 - dist) / (eps / 4.0));
  }

  /// phi(x) / (phi(x) + phi(1-x)), phi(x) = exp(-1/x) for x > 0, else 0.
  template <class T>
  static T smooth_step(const T& x) {
    const double xv = value_of(x);
    if (xv <= 0.0) return T(0.0);
    if (xv >= 1.0) return T(1.0);
    using std::exp;
    const T a = exp(-1.0 / x);
    const T b = exp(-1.0 / (1.0 - x));
    return a / (a + b);
  }
};

/// Scalar convenience wrapper.
double bump_profile(double rho, const BumpProfile& bump);

// Built-in families.
MetricField flat_r3();
MetricField round_s3();
MetricField hopf_eps(double eps);
MetricField hopf_eps_bumped(double eps);

/// "flat-r3", "round-s3", "hopf-eps" (eps), "hopf-eps-bumped" (eps).
MetricField metric_by_id(const std::string& id, const std::map<std::string, double>& params);

/// Declarative metric from component expressions. `chart` is "cartesian"
/// (variables x y z) or "hopf" (variables rho theta1 theta2); `components`
/// maps "g11".."g33" (upper triangle, 1-based) to expressions; missing
/// entries are zero.
MetricField metric_from_expressions(const std::string& chart,
                                    const std::map<std::string, std::string>& components,
                                    const std::map<std::string, double>& params);

/// Loads the JSON metric file format documented in docs/formats.md.
MetricField load_metric_file(const std::string& path);

/// Gamma^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij) for any dimension.
template <int N>
std::array<MatN<double, N>, N> christoffel_from(const MatN<double, N>& g,
                                                const std::array<MatN<double, N>, N>& dg) {
  Eigen::Matrix<double, N, N> gm;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) gm(i, j) = g[i][j];
  Eigen::FullPivLU<Eigen::Matrix<double, N, N>> lu(gm);
  if (!lu.isInvertible()) throw ImmersionError("metric matrix is singular");
  const Eigen::Matrix<double, N, N> inv = lu.inverse();
  std::array<MatN<double, N>, N> gamma{};
  for (int k = 0; k < N; ++k)
    for (int i = 0; i < N; ++i)
      for (int j = i; j < N; ++j) {
        double s = 0.0;
        for (int l = 0; l < N; ++l)
          s += inv(k, l) * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
        gamma[k][i][j] = 0.5 * s;
        gamma[k][j][i] = 0.5 * s;
      }
  return gamma;
}

Christoffel3 christoffel(const MetricField& metric, const ChartPoint& p);

/// |dg|^2 = b^{ik} b^{jl} dg_ij dg_kl with indices raised by `background`.
double tensor_norm_sq(const Mat3<double>& dg, const Mat3<double>& background);

struct L2DistanceOptions {
  int resolution = 64;  ///< points per axis
  int panel_order = 16; ///< Gauss-Legendre order per panel on open axes
  double clip = 1e-6;   ///< distance kept from open chart bounds
  /// Box for Cartesian charts (the chart itself is unbounded).
  std::array<double, 3> box_lower{-1.0, -1.0, -1.0};
  std::array<double, 3> box_upper{1.0, 1.0, 1.0};
  Execution exec = Execution::Parallel;
};

/// 2 * integral of |gA - gB|^2 dV with norm and volume from `background`.
double l2_metric_distance(const MetricField& a, const MetricField& b,
                          const MetricField& background, const L2DistanceOptions& opt = {});

}  // namespace ngeo
