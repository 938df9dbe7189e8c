#pragma once

// Umbilic detection on parameterized surfaces, half-integer indices from the
// winding of the principal line field, and the index-bound audit.

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ngeo/surface_geom.hpp"

namespace ngeo {

struct UmbilicRecord {
  Vec2 location{};             ///< (s, t)
  Vec3<double> position{};     ///< chart position of the refined point
  double discriminant = 0.0;   ///< |k1 - k2| at the refined point
  std::optional<double> index; ///< half-integer; never set for non-isolated loci
  bool isolated = true;
};

/// |k1 - k2| and max(|k1|, |k2|) on a cell-centred grid. Cells where the
/// immersion degenerates hold NaN.
struct DiscriminantGrid {
  int ns = 0, nt = 0;
  ParamDomain domain;
  std::vector<double> disc;
  std::vector<double> kmax;

  double ds() const { return domain.length_s() / ns; }
  double dt() const { return domain.length_t() / nt; }
  Vec2 center(int i, int j) const {
    return {domain.s0 + (i + 0.5) * ds(), domain.t0 + (j + 0.5) * dt()};
  }
  double at(int i, int j) const { return disc[static_cast<std::size_t>(i) * nt + j]; }
};

DiscriminantGrid discriminant_grid(const SurfaceImmersion& surface, const MetricField& metric,
                                   int ns, int nt, std::optional<ParamDomain> bounds = {},
                                   Execution exec = Execution::Parallel);

struct ScanOptions {
  int ns = 256;
  int nt = 256;
  /// Zero threshold relative to the largest principal curvature on the grid.
  double tol_rel = 1e-6;
  std::optional<ParamDomain> bounds;
  Execution exec = Execution::Parallel;
};

struct ScanResult {
  std::vector<UmbilicRecord> records;  ///< sorted by (s, t)
  std::vector<std::string> warnings;
  double tolerance = 0.0;              ///< absolute discriminant threshold used
  double cell = 0.0;                   ///< max(ds, dt)
};

ScanResult umbilic_scan(const SurfaceImmersion& surface, const MetricField& metric,
                        const ScanOptions& opt = {});

/// Accumulated projective angle of a line field along a closed loop, in turns.
/// `angle(k)` is the field angle at sample k of n; the loop closes at k = n.
struct Turning {
  double turns = 0.0;
  double max_step = 0.0;  ///< largest per-sample increment, radians
};
Turning line_field_turning(const std::function<double(int)>& angle, int n);

/// Rounds a turning count to the nearest half-integer after checking that
/// successive resolutions agree. `turning(n)` samples the loop at n points.
double stable_half_integer(const std::function<Turning(int)>& turning, int n0 = 1024,
                           int n_max = 65536);

/// Index of the principal line field along a closed parameter loop,
/// loop(a) for a in [0, 2 pi). Handles either loop orientation. Throws
/// UnreliableLoopError when the loop meets the zero set.
double principal_index_along(const SurfaceImmersion& surface, const MetricField& metric,
                             const std::function<Vec2(double)>& loop, double tol,
                             int n0 = 1024);

/// Index of an isolated umbilic from a circular parameter loop.
double umbilic_index(const SurfaceImmersion& surface, const MetricField& metric,
                     const UmbilicRecord& record, double loop_radius, double tol);

int euler_characteristic(const SurfaceImmersion& surface);

struct AuditCheck {
  std::string name;
  double value = 0.0;
  double reference = 0.0;
  bool applicable = true;
  bool pass = true;
};

struct AuditReport {
  std::vector<UmbilicRecord> records;
  std::vector<std::string> warnings;
  int isolated_count = 0;
  bool non_isolated = false;  ///< caveat: bounds evaluated on isolated points only
  bool closed = true;  ///< euler and the global checks only apply to closed surfaces
  int euler = 2;
  double max_index = 0.0;
  double index_sum = 0.0;
  double tolerance = 0.0;
  std::vector<AuditCheck> checks;

  bool all_pass() const;
};

struct AuditOptions {
  ScanOptions scan;
  double loop_cells = 4.0;
};

AuditReport conjecture_audit(const SurfaceImmersion& surface, const MetricField& metric,
                             const AuditOptions& opt = {});

/// Columns s, t, discriminant, index_num (twice the index), isolated.
void write_umbilic_csv(std::ostream& out, const std::vector<UmbilicRecord>& records);

}  // namespace ngeo
