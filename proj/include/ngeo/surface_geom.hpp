#pragma once

// Extrinsic geometry of parameterized surfaces inside a chart carrying a
// MetricField: fundamental forms, normal, principal curvatures, area and the
// Willmore energy.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ngeo/chart_tensor.hpp"
#include "ngeo/dual.hpp"
#include "ngeo/expr.hpp"
#include "ngeo/parallel.hpp"
#include "ngeo/tensor.hpp"

namespace ngeo {

struct ParamDomain {
  double s0 = 0.0, s1 = 1.0;
  double t0 = 0.0, t1 = 1.0;
  bool periodic_s = false;
  bool periodic_t = false;

  double length_s() const { return s1 - s0; }
  double length_t() const { return t1 - t0; }
};

/// Values and exact first/second partials of an immersion at one point.
struct SurfaceJet {
  Vec3<double> x{};
  std::array<Vec3<double>, 2> dx{};                   // X_s, X_t
  std::array<std::array<Vec3<double>, 2>, 2> ddx{};   // X_ab
};

class SurfaceImmersion {
 public:
  using J2 = D2<2>;
  using J3 = D3<2>;
  using Eval2 = std::function<Vec3<J2>(const J2&, const J2&)>;
  using Eval3 = std::function<Vec3<J3>(const J3&, const J3&)>;

  SurfaceImmersion(std::string id, ChartKind chart, ParamDomain domain, Eval2 eval2,
                   Eval3 eval3 = {}, int orientation = 1, bool closed = false);

  /// Builds both jet evaluators from one generic callable f(s, t) -> Vec3<T>.
  template <class F>
  static SurfaceImmersion from_generic(std::string id, ChartKind chart, ParamDomain domain, F f,
                                       int orientation = 1, bool closed = false) {
    Eval2 e2 = [f](const J2& s, const J2& t) { return f(s, t); };
    Eval3 e3 = [f](const J3& s, const J3& t) { return f(s, t); };
    return SurfaceImmersion(std::move(id), chart, domain, std::move(e2), std::move(e3),
                            orientation, closed);
  }

  const std::string& id() const { return id_; }
  ChartKind chart() const { return chart_; }
  const ParamDomain& domain() const { return domain_; }
  int orientation() const { return orientation_; }
  bool closed() const { return closed_; }
  bool has_third_order() const { return static_cast<bool>(eval3_); }

  SurfaceJet jet(double s, double t) const;
  Vec3<double> point(double s, double t) const { return jet(s, t).x; }
  Vec3<J2> eval2(const J2& s, const J2& t) const { return eval2_(s, t); }
  Vec3<J3> eval3(const J3& s, const J3& t) const;

 private:
  std::string id_;
  ChartKind chart_;
  ParamDomain domain_;
  Eval2 eval2_;
  Eval3 eval3_;
  int orientation_;
  bool closed_;
};

struct CurvatureReport {
  Mat2 first{};               ///< I_ab
  Mat2 second{};              ///< II_ab, positive for outward spheres
  Vec3<double> normal{};      ///< N^i (contravariant chart components)
  double mean_curvature = 0;  ///< (k1 + k2) / 2
  double trace_curvature = 0; ///< trace(I^-1 II) = k1 + k2
  double k1 = 0;              ///< k1 >= k2
  double k2 = 0;
  double discriminant = 0;    ///< |k1 - k2|
  double area_density = 0;    ///< sqrt(det I)
  /// Principal direction of k1 in parameter components; unreliable when
  /// discriminant < principal_tolerance.
  Vec2 principal_direction{};
  bool principal_reliable = true;
  double normal_residual = 0; ///< max(|g(N, X_a)|, |g(N, N) - 1|)
};

inline constexpr double kPrincipalTolerance = 1e-9;

CurvatureReport fundamental_forms(const SurfaceImmersion& surface, const MetricField& metric,
                                  double s, double t);

struct Curvatures {
  double mean = 0;   ///< half-trace convention
  double trace = 0;  ///< trace convention
  double k1 = 0, k2 = 0;
  double discriminant = 0;
};

Curvatures curvatures(const SurfaceImmersion& surface, const MetricField& metric, double s,
                      double t);

enum class MeanCurvatureConvention { Trace, HalfTrace };

struct SurfaceQuadrature {
  int ns = 128;
  int nt = 128;
  /// Required for surfaces that are not closed.
  std::optional<ParamDomain> bounds;
  MeanCurvatureConvention convention = MeanCurvatureConvention::Trace;
  Execution exec = Execution::Parallel;
};

double area(const SurfaceImmersion& surface, const MetricField& metric,
            const SurfaceQuadrature& q = {});
/// W = integral of (1 + H^2) dmu.
double willmore_energy(const SurfaceImmersion& surface, const MetricField& metric,
                       const SurfaceQuadrature& q = {});

/// For each radius (ascending), the smallest umbilic discriminant sampled on
/// a fixed lattice of spacing max(radii)/resolution inside the parameter disk
/// around `center`. Nested lattices make the sequence non-increasing.
std::vector<double> toponogov_probe(const SurfaceImmersion& surface, const MetricField& metric,
                                    const std::vector<double>& radii, int resolution = 200,
                                    Vec2 center = {0.0, 0.0});

// Built-in surfaces.
SurfaceImmersion clifford_torus(double rho = std::numbers::pi / 4.0);
SurfaceImmersion round_sphere(double r, Vec3<double> center = {0, 0, 0});
SurfaceImmersion ellipsoid(double a, double b, double c);
SurfaceImmersion torus_of_revolution(double R, double r);
/// z = f(x, y) over [-half_width, half_width]^2.
SurfaceImmersion graph_surface(const std::string& expression, double half_width,
                               const std::map<std::string, double>& params = {});
SurfaceImmersion paraboloid(double half_width = 4.0);
SurfaceImmersion saddle(double half_width = 4.0);
/// X + d N in flat space. Needs a third-order evaluator on the source.
SurfaceImmersion parallel_surface(const SurfaceImmersion& source, double distance);

/// "clifford", "round-sphere" (r, cx, cy, cz), "ellipsoid" (a, b, c),
/// "torus-revolution" (R, r), "paraboloid", "saddle" (half_width),
/// "graph" (requires `expression`).
SurfaceImmersion surface_by_id(const std::string& id, const std::map<std::string, double>& params,
                               const std::string& expression = "");

}  // namespace ngeo
