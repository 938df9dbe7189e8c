#pragma once

// The space of oriented lines in flat R^3, modelled as TS^2: a line is a
// unit direction u with foot point V (u . V = 0). Carries the complex
// structure J, symplectic form omega and neutral metric G = omega(J., .).

#include <complex>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ngeo/surface_geom.hpp"

namespace ngeo {

struct OrientedLine {
  Vec3<double> u{0, 0, 1};
  Vec3<double> V{0, 0, 0};

  /// Line through `point` with direction `dir` (normalized here).
  static OrientedLine through(const Vec3<double>& point, const Vec3<double>& dir);
  /// max(| |u| - 1 |, |u . V|)
  double residual() const;
};

struct LineTangent {
  OrientedLine base;
  Vec3<double> du{};
  Vec3<double> dV{};

  /// Projects du onto u-perp and fixes the u-component of dV so that
  /// u . dV + V . du = 0.
  static LineTangent make(const OrientedLine& base, const Vec3<double>& du,
                          const Vec3<double>& dV);
  /// max(|u . du|, |u . dV + V . du|)
  double constraint_residual() const;
};

LineTangent operator+(const LineTangent& a, const LineTangent& b);
LineTangent operator*(double s, const LineTangent& a);

LineTangent apply_j(const LineTangent& x);
double omega(const LineTangent& x, const LineTangent& y);
double neutral_metric(const LineTangent& x, const LineTangent& y);

struct NeutralValues {
  LineTangent jx;
  double omega = 0.0;
  double g = 0.0;
};
/// Throws ParameterError when X and Y sit at different lines.
NeutralValues neutral_structures(const LineTangent& x, const LineTangent& y);

/// (du . ea, du . eb, dV . ea, dV . eb) with eb = u x ea. In this frame G has
/// determinant 1, like a G-orthonormal frame.
Eigen::Vector4d tangent_coordinates(const LineTangent& x, const Vec3<double>& ea);
/// A unit vector orthogonal to u, built from a fixed reference axis.
Vec3<double> reference_frame(const Vec3<double>& u, const Vec3<double>& hint = {1, 0, 0});

enum class PlaneType { PositiveDefinite, NegativeDefinite, Lorentz, Degenerate, TotallyNull };
std::string to_string(PlaneType t);

struct PlaneClass {
  PlaneType type = PlaneType::Degenerate;
  bool lagrangian = false;
  bool holomorphic = false;
  Mat2 gram{};              ///< G(X_i, X_j) in a Euclidean-orthonormal basis of the plane
  Vec2 eigenvalues{};       ///< ascending
  double omega = 0.0;       ///< omega on that basis
  double holomorphic_defect = 0.0;  ///< sine of the angle between the plane and its J-image
};
PlaneClass classify_plane(const LineTangent& x1, const LineTangent& x2, double tol = 1e-10);

/// Orientation sign of the 4-determinant, calibrated once on a definite,
/// non-holomorphic plane.
int wirtinger_orientation();
struct WirtingerTerms {
  double omega_sq = 0.0;
  double det4 = 0.0;  ///< oriented determinant of (X1, X2, JX1, JX2)
  double det_gram = 0.0;
  double residual = 0.0;
};
WirtingerTerms wirtinger_terms(const LineTangent& x1, const LineTangent& x2);
double wirtinger_residual(const LineTangent& x1, const LineTangent& x2);

/// One sample of a two-parameter family of lines with first derivatives.
struct SectionJet {
  OrientedLine line;
  std::array<Vec3<double>, 2> du{};
  std::array<Vec3<double>, 2> dV{};

  LineTangent tangent(int a) const { return {line, du[a], dV[a]}; }
};

/// Decomposition of a graphical tangent plane dV_perp = L du over u-perp in
/// the frame (ea, eb = u x ea): L = a I + b R + [[p, q], [q, -p]] with R the
/// quarter turn. psi = p + i q vanishes exactly on J-invariant planes.
struct PlaneGraph {
  double a = 0.0, b = 0.0;
  std::complex<double> psi;
};
PlaneGraph plane_graph(const SectionJet& jet, const Vec3<double>& ea);

/// A map from a parameter rectangle into line space, graphical over its
/// direction image. Samples outside `active` are ignored by scans.
class LineSection {
 public:
  using Eval = std::function<SectionJet(double, double)>;
  using Active = std::function<bool(double, double)>;

  LineSection(std::string id, ParamDomain domain, Eval eval, Active active = {});

  /// f(s, t) -> std::pair<Vec3<D1<2>>, Vec3<D1<2>>> giving (direction,
  /// foot). The direction is normalized and the foot projected onto u-perp.
  template <class F>
  static LineSection from_generic(std::string id, ParamDomain domain, F f, Active active = {}) {
    Eval e = [f](double s, double t) {
      const auto [u_raw, w] = f(variable1<2>(s, 0), variable1<2>(t, 1));
      return make_jet(u_raw, w);
    };
    return LineSection(std::move(id), domain, std::move(e), std::move(active));
  }
  static SectionJet make_jet(const Vec3<D1<2>>& u_raw, const Vec3<D1<2>>& w);

  const std::string& id() const { return id_; }
  const ParamDomain& domain() const { return domain_; }
  SectionJet jet(double s, double t) const { return eval_(s, t); }
  bool active(double s, double t) const { return !active_ || active_(s, t); }
  const Active& active_predicate() const { return active_; }
  Eval evaluator() const { return eval_; }

  std::vector<std::string> warnings;

 private:
  std::string id_;
  ParamDomain domain_;
  Eval eval_;
  Active active_;
};

/// Lines normal to a flat-space surface: u = N, V = X - (X . N) N.
LineSection normal_congruence(const SurfaceImmersion& surface, int check_resolution = 64);

/// Section over the sphere of directions in polar coordinates (theta, phi).
LineSection sphere_section(std::string id,
                           std::function<Vec3<D1<2>>(const Vec3<D1<2>>&)> foot);
/// Section over the open upper hemisphere in stereographic coordinates
/// xi = (X, Y), u = (2X, 2Y, 1 - |xi|^2) / (1 + |xi|^2), restricted to
/// |xi| < radius (< 1).
LineSection hemisphere_section(std::string id,
                               std::function<Vec3<D1<2>>(const Vec3<D1<2>>&)> foot,
                               double radius);
LineSection zero_section();
/// Normal congruence of the ellipsoid, parameterized by direction through
/// its support function: foot = tangential part of diag(a^2, b^2, c^2) u / h.
Vec3<D1<2>> ellipsoid_foot(const Vec3<D1<2>>& u, double a, double b, double c);

/// Returns a copy restricted to samples where `keep` also holds.
LineSection restrict_section(const LineSection& section, LineSection::Active keep);

struct ComplexPoint {
  Vec2 location{};
  Vec3<double> direction{};
  double defect = 0.0;
  bool isolated = true;
  std::optional<int> winding;   ///< of psi around a positive loop on S^2
  std::optional<double> index;  ///< winding / 2
};

struct ComplexPointScan {
  std::vector<ComplexPoint> points;
  std::vector<std::string> warnings;
  double tolerance = 0.0;
  double min_defect = 0.0;  ///< smallest |psi| over active samples
  double cell = 0.0;
};

struct ComplexScanOptions {
  int ns = 256;
  int nt = 256;
  double tol_rel = 1e-6;  ///< relative to the largest |L| sampled, floored at 1e-12
  double loop_cells = 4.0;
  Execution exec = Execution::Parallel;
};

/// |psi| on the cell-centred grid, NaN on inactive cells.
std::vector<double> defect_grid(const LineSection& section, int ns, int nt,
                                Execution exec = Execution::Parallel);
ComplexPointScan complex_point_scan(const LineSection& section, const ComplexScanOptions& opt = {});

/// Winding of psi along a parameter loop, signed so that loops positive on
/// S^2 about the enclosed directions count positively.
int defect_winding(const LineSection& section, const std::function<Vec2(double)>& loop, double tol,
                   int n0 = 1024);

/// Counter-clockwise circle of angular radius `radius` about `center`.
std::vector<Vec3<double>> direction_circle(const Vec3<double>& center, double radius, int n);

/// Parameters (s, t) with section direction equal to u. Newton iteration from
/// `guess`; periodic coordinates are not wrapped, so continuation along a loop
/// stays continuous. Throws DomainError when it does not converge.
Vec2 invert_direction(const LineSection& section, const Vec3<double>& u, Vec2 guess);
/// Coarse search for a starting point of invert_direction.
Vec2 nearest_direction(const LineSection& section, const Vec3<double>& u, int resolution = 64);

struct MaslovResult {
  int winding = 0;        ///< of psi
  int mu = 0;             ///< 2 * winding
  double index = 0.0;     ///< mu / 4
  int dimension = 0;      ///< mu + 2
  int unparameterized = 0;///< mu - 1
  std::vector<Vec2> parameter_loop;  ///< preimage of the direction loop
};

/// `loop` is a closed polyline of directions (last vertex not repeated).
/// Each edge is subdivided along great circles until the winding is stable.
MaslovResult maslov_index(const LineSection& section, const std::vector<Vec3<double>>& loop,
                          double tol = 0.0);

struct SymplecticArea {
  double two_form = 0.0;  ///< integral of omega over the disc
  double boundary = 0.0;  ///< integral of V . du around the boundary
};

/// `disc(x, y)` on the closed unit disc; polar Gauss-Legendre x trapezoid.
SymplecticArea symplectic_area(const LineSection::Eval& disc, int nr = 48, int nphi = 96,
                               Execution exec = Execution::Parallel);
/// The disc of parameter radius `radius` about `center` inside a section.
LineSection::Eval disc_in_section(const LineSection& section, Vec2 center, double radius);

/// V -> V + s (u x c): a fiberwise complex-linear map adding the rotation
/// -s (c . u) to L. Throws DomainError if any active sample has c . u <= 0.
LineSection holomorphic_twist(const LineSection& section, double strength,
                              const Vec3<double>& center, int check_resolution = 64);
/// Smallest strength for which every sampled tangent plane is positive
/// definite: max over samples of (|psi| + b) / (c . u).
double twist_threshold(const LineSection& section, const Vec3<double>& center, int ns = 128,
                       int nt = 128);
/// Smallest eigenvalue of G on the sampled tangent planes, each computed in
/// a Euclidean-orthonormal basis of du.
double definiteness_margin(const LineSection& section, int ns = 128, int nt = 128);

/// Text table: header lines starting with '#', then u_x..V_z rows in grid
/// order (s outer, t inner).
void write_section_table(std::ostream& out, const LineSection& section, int ns, int nt);
struct SectionTable {
  int ns = 0, nt = 0;
  ParamDomain domain;
  std::vector<OrientedLine> lines;
};
SectionTable read_section_table(std::istream& in);

}  // namespace ngeo
