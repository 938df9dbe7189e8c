#include "ngeo/umbilic_topology.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "ngeo/error.hpp"
#include "ngeo/format.hpp"
#include "zero_scan.hpp"

namespace ngeo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

DiscriminantGrid discriminant_grid(const SurfaceImmersion& surface, const MetricField& metric,
                                   int ns, int nt, std::optional<ParamDomain> bounds,
                                   Execution exec) {
  if (ns < 8 || nt < 8) throw ParameterError("scan grid needs at least 8 cells per axis");
  DiscriminantGrid g;
  g.ns = ns;
  g.nt = nt;
  g.domain = bounds.value_or(surface.domain());
  const std::size_t n = static_cast<std::size_t>(ns) * nt;
  g.disc.assign(n, kNaN);
  g.kmax.assign(n, kNaN);
  for_each_index(exec, ns, [&](int i) {
    for (int j = 0; j < nt; ++j) {
      const Vec2 p = g.center(i, j);
      const std::size_t idx = static_cast<std::size_t>(i) * nt + j;
      try {
        const Curvatures c = curvatures(surface, metric, p[0], p[1]);
        g.disc[idx] = c.discriminant;
        g.kmax[idx] = std::max(std::abs(c.k1), std::abs(c.k2));
      } catch (const ImmersionError&) {
      } catch (const DomainError&) {
      }
    }
  });
  return g;
}

ScanResult umbilic_scan(const SurfaceImmersion& surface, const MetricField& metric,
                        const ScanOptions& opt) {
  const DiscriminantGrid g = discriminant_grid(surface, metric, opt.ns, opt.nt, opt.bounds, opt.exec);
  double kmax = 0.0;
  for (double k : g.kmax)
    if (std::isfinite(k)) kmax = std::max(kmax, k);

  detail::ZeroField field;
  field.domain = g.domain;
  field.ns = g.ns;
  field.nt = g.nt;
  field.grid = g.disc;
  field.tol = opt.tol_rel * std::max(kmax, 1e-300);
  field.eval = [&](Vec2 p) {
    try {
      return fundamental_forms(surface, metric, p[0], p[1]).discriminant;
    } catch (const ImmersionError&) {
      return kNaN;
    } catch (const DomainError&) {
      return kNaN;
    }
  };
  const detail::ZeroScan zs = detail::find_zeros(field);

  ScanResult res;
  res.tolerance = field.tol;
  res.cell = std::max(g.ds(), g.dt());
  res.warnings = zs.warnings;
  for (const detail::Zero& z : zs.zeros) {
    UmbilicRecord rec;
    rec.location = z.location;
    rec.position = surface.point(z.location[0], z.location[1]);
    rec.discriminant = z.value;
    rec.isolated = z.isolated;
    res.records.push_back(rec);
  }
  return res;
}

Turning line_field_turning(const std::function<double(int)>& angle, int n) {
  Turning t;
  const double first = angle(0);
  double prev = first, total = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double cur = k == n ? first : angle(k);
    double step = cur - prev;
    step -= std::numbers::pi * std::round(step / std::numbers::pi);
    total += step;
    t.max_step = std::max(t.max_step, std::abs(step));
    prev = cur;
  }
  t.turns = total / (2.0 * std::numbers::pi);
  return t;
}

double stable_half_integer(const std::function<Turning(int)>& turning, int n0, int n_max) {
  auto half = [](double x) { return 0.5 * std::round(2.0 * x); };
  Turning prev = turning(n0);
  for (int n = 2 * n0; n <= n_max; n *= 2) {
    const Turning next = turning(n);
    const double h = half(next.turns);
    if (half(prev.turns) == h && std::abs(next.turns - h) < 0.05 &&
        next.max_step < std::numbers::pi / 8)
      return h;
    prev = next;
  }
  throw UnreliableLoopError("line field winding did not stabilise up to " +
                            std::to_string(n_max) + " samples");
}

double principal_index_along(const SurfaceImmersion& surface, const MetricField& metric,
                             const std::function<Vec2(double)>& loop, double tol, int n0) {
  auto turning = [&](int n) {
    std::vector<Vec2> pts(n);
    std::vector<double> ang(n);
    for (int k = 0; k < n; ++k) {
      pts[k] = loop(2.0 * std::numbers::pi * k / n);
      CurvatureReport rep;
      try {
        rep = fundamental_forms(surface, metric, pts[k][0], pts[k][1]);
      } catch (const ImmersionError& e) {
        throw UnreliableLoopError(std::string("loop crosses a degenerate point: ") + e.what());
      }
      if (!(rep.discriminant > tol))
        throw UnreliableLoopError("loop meets the umbilic set (discriminant " +
                                  num(rep.discriminant) + " <= " + num(tol) + ")");
      ang[k] = std::atan2(rep.principal_direction[1], rep.principal_direction[0]);
    }
    double area2 = 0.0;
    for (int k = 0; k < n; ++k) {
      const Vec2& a = pts[k];
      const Vec2& b = pts[(k + 1) % n];
      area2 += a[0] * b[1] - a[1] * b[0];
    }
    Turning t = line_field_turning([&](int k) { return ang[k]; }, n);
    if (area2 < 0.0) t.turns = -t.turns;
    return t;
  };
  return stable_half_integer(turning, n0);
}

double umbilic_index(const SurfaceImmersion& surface, const MetricField& metric,
                     const UmbilicRecord& record, double loop_radius, double tol) {
  if (!record.isolated)
    throw UnreliableLoopError("non-isolated umbilic loci are never assigned an index");
  if (!(loop_radius > 0.0)) throw ParameterError("loop radius must be positive");
  const Vec2 c = record.location;
  return principal_index_along(
      surface, metric,
      [&](double a) { return Vec2{c[0] + loop_radius * std::cos(a), c[1] + loop_radius * std::sin(a)}; },
      tol);
}

int euler_characteristic(const SurfaceImmersion& surface) {
  if (!surface.closed()) throw DomainError("surface '" + surface.id() + "' is not closed");
  const ParamDomain& d = surface.domain();
  return d.periodic_s && d.periodic_t ? 0 : 2;
}

bool AuditReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const AuditCheck& c) { return c.pass; });
}

AuditReport conjecture_audit(const SurfaceImmersion& surface, const MetricField& metric,
                             const AuditOptions& opt) {
  AuditReport rep;
  rep.closed = surface.closed();
  rep.euler = rep.closed ? euler_characteristic(surface) : 0;
  ScanResult scan = umbilic_scan(surface, metric, opt.scan);
  rep.warnings = scan.warnings;
  rep.tolerance = scan.tolerance;
  const double radius = opt.loop_cells * scan.cell;

  bool all_indexed = true;
  for (UmbilicRecord& r : scan.records) {
    if (!r.isolated) {
      rep.non_isolated = true;
      continue;
    }
    ++rep.isolated_count;
    try {
      r.index = umbilic_index(surface, metric, r, radius, scan.tolerance);
      const double wide = umbilic_index(surface, metric, r, 2.0 * radius, scan.tolerance);
      if (wide != *r.index)
        rep.warnings.push_back("index at (" + num(r.location[0]) + ", " + num(r.location[1]) +
                               ") changes under loop-radius doubling");
    } catch (const UnreliableLoopError& e) {
      all_indexed = false;
      rep.warnings.push_back(e.what());
    }
  }
  rep.records = std::move(scan.records);

  bool any_index = false;
  rep.max_index = -std::numeric_limits<double>::infinity();
  for (const auto& r : rep.records)
    if (r.index) {
      any_index = true;
      rep.max_index = std::max(rep.max_index, *r.index);
      rep.index_sum += *r.index;
    }
  if (!any_index) rep.max_index = 0.0;
  if (rep.non_isolated)
    rep.warnings.push_back("non-isolated umbilic loci present; bounds use isolated points only");

  auto check = [&](std::string name, double value, double ref, bool applicable, bool ok) {
    rep.checks.push_back({std::move(name), value, ref, applicable, !applicable || ok});
  };
  const double count = rep.isolated_count;
  check("umbilic_count_at_least_2", count, 2.0, rep.closed && rep.euler == 2 && !rep.non_isolated, count >= 2.0);
  check("max_index_at_most_1", rep.max_index, 1.0, any_index, rep.max_index <= 1.0);
  check("max_index_below_2", rep.max_index, 2.0, any_index, rep.max_index < 2.0);
  check("index_sum_equals_euler", rep.index_sum, rep.euler, rep.closed && !rep.non_isolated && all_indexed,
        rep.index_sum == rep.euler);
  return rep;
}

void write_umbilic_csv(std::ostream& out, const std::vector<UmbilicRecord>& records) {
  out << "s,t,discriminant,index_num,isolated\n";
  for (const auto& r : records) {
    out << num(r.location[0]) << ',' << num(r.location[1]) << ',' << num(r.discriminant) << ',';
    if (r.index) out << static_cast<int>(std::lround(2.0 * *r.index));
    out << ',' << (r.isolated ? 1 : 0) << '\n';
  }
}

}  // namespace ngeo
