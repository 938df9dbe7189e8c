#include "zero_scan.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "ngeo/format.hpp"

namespace ngeo::detail {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class Geometry {
 public:
  explicit Geometry(const ZeroField& f) : f_(f) {}

  // Neighbour index with wrap on periodic axes, -1 outside.
  int neighbour(int i, int j, int di, int dj) const {
    int a = i + di, b = j + dj;
    if (a < 0 || a >= f_.ns) {
      if (!f_.domain.periodic_s) return -1;
      a = (a + f_.ns) % f_.ns;
    }
    if (b < 0 || b >= f_.nt) {
      if (!f_.domain.periodic_t) return -1;
      b = (b + f_.nt) % f_.nt;
    }
    return a * f_.nt + b;
  }

  // Parameter separation in cells, wrapping periodic axes.
  double cell_distance(Vec2 p, Vec2 q) const {
    double ds = std::abs(p[0] - q[0]), dt = std::abs(p[1] - q[1]);
    if (f_.domain.periodic_s) ds = std::min(ds, f_.domain.length_s() - ds);
    if (f_.domain.periodic_t) dt = std::min(dt, f_.domain.length_t() - dt);
    return std::hypot(ds / f_.ds(), dt / f_.dt());
  }

  // Wraps periodic coordinates; nullopt when p leaves a bounded axis.
  std::optional<Vec2> normalize(Vec2 p) const {
    const ParamDomain& d = f_.domain;
    if (d.periodic_s) p[0] = wrap(p[0], d.s0, d.s1);
    else if (p[0] < d.s0 || p[0] > d.s1) return std::nullopt;
    if (d.periodic_t) p[1] = wrap(p[1], d.t0, d.t1);
    else if (p[1] < d.t0 || p[1] > d.t1) return std::nullopt;
    return p;
  }

  double value(Vec2 p) const {
    const auto q = normalize(p);
    return q ? f_.eval(*q) : kNaN;
  }

 private:
  const ZeroField& f_;
};

struct Refined {
  Vec2 p{};
  double value = kNaN;
  bool fit_ok = false;
};

// Iterated least-squares fit of f^power on a 5x5 stencil with shrinking
// spacing. power 2 suits conical zeros, power 1 zeros of second order.
Refined refine(const Geometry& geo, Vec2 p, double hs, double ht, int power, double tol) {
  static const Eigen::Matrix<double, 25, 6> design = [] {
    Eigen::Matrix<double, 25, 6> m;
    int r = 0;
    for (int k = -2; k <= 2; ++k)
      for (int l = -2; l <= 2; ++l, ++r) m.row(r) << 1.0, k, l, k * k, k * l, l * l;
    return m;
  }();
  static const Eigen::ColPivHouseholderQR<Eigen::Matrix<double, 25, 6>> qr(design);

  Refined out;
  const double hs_min = hs * 1e-7;
  for (int iter = 0; iter < 80 && hs > hs_min; ++iter) {
    Eigen::Matrix<double, 25, 1> f;
    double dmax = 0.0;
    int r = 0;
    for (int k = -2; k <= 2; ++k)
      for (int l = -2; l <= 2; ++l, ++r) {
        const double d = geo.value({p[0] + k * hs, p[1] + l * ht});
        if (!std::isfinite(d)) return out;
        f[r] = power == 2 ? d * d : d;
        dmax = std::max(dmax, d);
      }
    // The whole stencil is deep inside the zero set; further fits see only rounding.
    if (iter > 0 && dmax < 1e-6 * tol) break;
    const Eigen::Matrix<double, 6, 1> c = qr.solve(f);
    const double scale = f.cwiseAbs().maxCoeff();
    const double resid = std::sqrt((design * c - f).squaredNorm() / 25.0);
    out.fit_ok = scale == 0.0 || resid < 0.1 * scale;

    Eigen::Matrix2d hess;
    hess << 2 * c[3], c[4], c[4], 2 * c[5];
    Eigen::Vector2d step;
    if (hess.determinant() > 0.0 && hess(0, 0) > 0.0) {
      step = -hess.inverse() * Eigen::Vector2d(c[1], c[2]);
      const double m = step.cwiseAbs().maxCoeff();
      if (m > 2.0) step *= 2.0 / m;
    } else {
      Eigen::Index best = 0;
      f.minCoeff(&best);
      step << static_cast<double>(best / 5 - 2), static_cast<double>(best % 5 - 2);
    }
    const auto q = geo.normalize({p[0] + step[0] * hs, p[1] + step[1] * ht});
    if (!q) return out;
    p = *q;
    if (step.cwiseAbs().maxCoeff() < 0.5) {
      hs *= 0.25;
      ht *= 0.25;
    }
  }
  out.p = p;
  out.value = geo.value(p);
  return out;
}

}  // namespace

double wrap(double v, double lo, double hi) {
  const double len = hi - lo;
  v = std::fmod(v - lo, len);
  if (v < 0.0) v += len;
  return lo + v;
}

ZeroScan find_zeros(const ZeroField& field) {
  const Geometry geo(field);
  const double tol = field.tol;
  const std::vector<double>& g = field.grid;
  const std::size_t n = g.size();
  ZeroScan res;

  auto edge_cell = [&](int i, int j) {
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj) {
        const int nb = geo.neighbour(i, j, di, dj);
        if (nb < 0 || !std::isfinite(g[nb])) return true;
      }
    return false;
  };

  // Connected zero regions larger than a 3x3 block are extended loci.
  std::vector<bool> seen(n, false), extended(n, false);
  for (std::size_t start = 0; start < n; ++start) {
    if (seen[start] || !(g[start] < tol)) continue;
    std::vector<std::size_t> members{start}, stack{start};
    seen[start] = true;
    while (!stack.empty()) {
      const std::size_t c = stack.back();
      stack.pop_back();
      const int i = static_cast<int>(c / field.nt), j = static_cast<int>(c % field.nt);
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          const int nb = geo.neighbour(i, j, di, dj);
          if (nb < 0 || seen[nb] || !(g[nb] < tol)) continue;
          seen[nb] = true;
          members.push_back(nb);
          stack.push_back(nb);
        }
    }
    if (members.size() <= 9) continue;
    std::size_t best = members.front();
    for (std::size_t m : members) {
      extended[m] = true;
      if (g[m] < g[best]) best = m;
    }
    const int i = static_cast<int>(best / field.nt), j = static_cast<int>(best % field.nt);
    res.zeros.push_back({field.center(i, j), g[best], false, edge_cell(i, j)});
  }

  std::vector<Zero> isolated;
  for (int i = 0; i < field.ns; ++i)
    for (int j = 0; j < field.nt; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * field.nt + j;
      const double d = g[idx];
      if (!std::isfinite(d) || extended[idx]) continue;
      bool minimum = true;
      double spread = 0.0;
      for (int di = -1; di <= 1 && minimum; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          const int nb = geo.neighbour(i, j, di, dj);
          if (nb < 0 || !std::isfinite(g[nb])) continue;
          if (g[nb] < d || (g[nb] == d && static_cast<std::size_t>(nb) < idx)) {
            minimum = false;
            break;
          }
          spread = std::max(spread, g[nb] - d);
        }
      // A conical tip sits within a few neighbour increments of zero; flat
      // valleys of a positive field do not.
      if (!minimum || !(d < tol || d <= 16.0 * spread)) continue;

      Refined r = refine(geo, field.center(i, j), 0.5 * field.ds(), 0.5 * field.dt(), 2, tol);
      if (!r.fit_ok) {
        const Refined flat = refine(geo, field.center(i, j), 0.5 * field.ds(), 0.5 * field.dt(), 1, tol);
        if (flat.fit_ok) r = flat;
      }
      if (!std::isfinite(r.value) || !(r.value < tol)) continue;
      if (!r.fit_ok) {
        res.warnings.push_back("quadratic fit residual above 10% near cell (" +
                               std::to_string(i) + ", " + std::to_string(j) +
                               "); candidate dropped");
        continue;
      }
      bool all_zero = true;
      for (int k = 0; k < 64 && all_zero; ++k) {
        const double a = 2.0 * std::numbers::pi * k / 64;
        const double v = geo.value({r.p[0] + 4.0 * field.ds() * std::cos(a),
                                    r.p[1] + 4.0 * field.dt() * std::sin(a)});
        all_zero = std::isfinite(v) && v < tol;
      }
      isolated.push_back({r.p, r.value, !all_zero, edge_cell(i, j)});
    }

  std::sort(isolated.begin(), isolated.end(), [](const Zero& a, const Zero& b) {
    return a.value < b.value || (a.value == b.value && a.location < b.location);
  });
  std::vector<Zero> kept;
  for (const Zero& z : isolated) {
    const bool dup = std::any_of(kept.begin(), kept.end(), [&](const Zero& k) {
      return geo.cell_distance(k.location, z.location) < 2.0;
    });
    if (dup)
      res.warnings.push_back("candidates at (" + num(z.location[0]) + ", " + num(z.location[1]) +
                             ") merged: grid too coarse to separate them");
    else
      kept.push_back(z);
  }
  res.zeros.insert(res.zeros.end(), kept.begin(), kept.end());
  std::sort(res.zeros.begin(), res.zeros.end(),
            [](const Zero& a, const Zero& b) { return a.location < b.location; });
  return res;
}

}  // namespace ngeo::detail
