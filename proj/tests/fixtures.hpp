#pragma once

// Random inputs and test surfaces shared by the unit tests and the
// acceptance run.

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "ngeo/line_space.hpp"
#include "ngeo/surface_geom.hpp"

namespace fixture {

using ngeo::D1;
using ngeo::Vec3;
using std::numbers::pi;

inline Vec3<double> random_hopf_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> rho(0.05, pi / 2 - 0.05), th(0.0, 2 * pi);
  return {rho(rng), th(rng), th(rng)};
}

// A wavy torus near the Clifford torus, so that II is not diagonal.
inline ngeo::SurfaceImmersion wavy_hopf_torus() {
  return ngeo::SurfaceImmersion::from_generic(
      "wavy", ngeo::ChartKind::Hopf, ngeo::ParamDomain{0, 2 * pi, 0, 2 * pi, true, true},
      [](const auto& s, const auto& t) {
        using T = std::decay_t<decltype(s)>;
        using std::cos;
        using std::sin;
        return Vec3<T>{pi / 4 + 0.1 * sin(s) * cos(2.0 * t), s, t};
      },
      1, true);
}

// Polynomial disc (x, y) -> line, random coefficients.
inline ngeo::LineSection::Eval random_disc(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> c(-0.6, 0.6);
  std::array<std::array<double, 6>, 6> k{};
  for (auto& row : k)
    for (auto& v : row) v = c(gen);
  const ngeo::LineSection sec = ngeo::LineSection::from_generic(
      "disc", ngeo::ParamDomain{-1, 1, -1, 1, false, false}, [k](const D1<2>& x, const D1<2>& y) {
        std::array<D1<2>, 6> m{D1<2>(1.0), x, y, x * x, x * y, y * y};
        Vec3<D1<2>> u{}, w{};
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 6; ++j) {
            u[i] = u[i] + (j == 0 ? (i == 2 ? 2.0 : 0.0) : k[i][j]) * m[j];
            w[i] = w[i] + k[i + 3][j] * m[j];
          }
        return std::pair{u, w};
      });
  return [sec](double x, double y) { return sec.jet(x, y); };
}

}  // namespace fixture
