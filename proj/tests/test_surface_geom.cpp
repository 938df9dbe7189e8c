#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "ngeo/surface_geom.hpp"
#include "oracles.hpp"

using namespace ngeo;
using std::numbers::pi;

namespace {

SurfaceImmersion unit_cylinder() {
  return SurfaceImmersion::from_generic(
      "cylinder", ChartKind::Cartesian, ParamDomain{0, 2 * pi, -1, 1, true, false},
      [](const auto& s, const auto& t) {
        using T = std::decay_t<decltype(s)>;
        return Vec3<T>{cos(s), sin(s), t};
      });
}

using fixture::wavy_hopf_torus;

}  // namespace

TEST_CASE("Clifford torus fundamental forms under the eps deformation") {
  for (double eps : {0.0, 0.3, 0.8}) {
    const MetricField g = hopf_eps(eps);
    const CurvatureReport r = fundamental_forms(clifford_torus(), g, 1.1, 4.0);
    CHECK(r.first[0][0] == doctest::Approx(0.5));
    CHECK(r.first[1][1] == doctest::Approx(0.5));
    CHECK(r.first[0][1] == doctest::Approx(eps / 2));
    CHECK(std::abs(r.second[0][1]) < 1e-14);
    CHECK(r.second[0][0] > 0.0);
    CHECK(r.second[1][1] < 0.0);
    CHECK(r.second[0][0] == doctest::Approx(-r.second[1][1]));
    // 1/2 d_rho(sin^2 rho) at pi/4
    if (eps == 0.0) CHECK(r.second[0][0] == doctest::Approx(0.5));
    CHECK(std::abs(r.trace_curvature) < 1e-14);
    CHECK(r.area_density == doctest::Approx(0.5 * std::sqrt(1 - eps * eps)));
    CHECK(r.normal[0] == doctest::Approx(1.0));
    // Principal curvatures are +-1/sqrt(1 - eps^2): never umbilic.
    CHECK(r.k1 == doctest::Approx(1 / std::sqrt(1 - eps * eps)));
    CHECK(r.discriminant == doctest::Approx(2 / std::sqrt(1 - eps * eps)));
  }
}

TEST_CASE("Clifford torus stays minimal") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> th(0, 2 * pi);
  for (double eps : {0.0, 0.25, 0.5, 0.75, 0.99 * (1 - 1e-6)}) {
    const MetricField g = hopf_eps(eps);
    double worst = 0.0;
    for (int n = 0; n < 2000; ++n) {
      const auto c = curvatures(clifford_torus(), g, th(rng), th(rng));
      worst = std::max({worst, std::abs(c.trace), std::abs(c.mean)});
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("round sphere, cylinder and ellipsoid curvatures") {
  for (double r : {0.5, 1.0, 3.0}) {
    const CurvatureReport rep = fundamental_forms(round_sphere(r, {1, 2, 3}), flat_r3(), 0.9, 2.0);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) CHECK(rep.second[a][b] == doctest::Approx(rep.first[a][b] / r));
    CHECK(rep.k1 == doctest::Approx(1 / r));
    CHECK(rep.k2 == doctest::Approx(1 / r));
    CHECK(rep.discriminant < 1e-12);
    CHECK(rep.normal_residual < 1e-10);
  }
  const auto cyl = curvatures(unit_cylinder(), flat_r3(), 0.4, 0.2);
  CHECK(cyl.k1 == doctest::Approx(1.0));
  CHECK(std::abs(cyl.k2) < 1e-14);
  CHECK(cyl.discriminant == doctest::Approx(1.0));

  // At (+-a, 0, 0) the principal curvatures are a/b^2 and a/c^2.
  const SurfaceImmersion e = ellipsoid(2.0, 1.5, 1.0);
  for (double phi : {0.0, pi}) {
    const auto c = curvatures(e, flat_r3(), pi / 2, phi);
    CHECK(c.k1 == doctest::Approx(2.0));
    CHECK(c.k2 == doctest::Approx(2.0 / 2.25));
    CHECK(c.discriminant == doctest::Approx(2.0 - 2.0 / 2.25));
    CHECK(c.discriminant > 0.0);
  }
}

TEST_CASE("fundamental forms match the finite-difference oracle") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  struct Case {
    SurfaceImmersion s;
    MetricField m;
  };
  const std::vector<Case> cases{{ellipsoid(2, 1.5, 1), flat_r3()},
                                {torus_of_revolution(2, 1), flat_r3()},
                                {wavy_hopf_torus(), hopf_eps_bumped(0.6)},
                                {clifford_torus(), hopf_eps(0.4)},
                                {saddle(), flat_r3()}};
  for (const auto& c : cases) {
    const ParamDomain d = c.s.domain();
    for (int n = 0; n < 200; ++n) {
      const double s = d.s0 + (0.05 + 0.9 * u(rng)) * d.length_s();
      const double t = d.t0 + (0.05 + 0.9 * u(rng)) * d.length_t();
      const CurvatureReport rep = fundamental_forms(c.s, c.m, s, t);
      const oracle::FdForms fd = oracle::fd_fundamental_forms(c.s, c.m, s, t);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          REQUIRE(oracle::close_rel(rep.first[a][b], fd.first[a][b], 1e-6));
          REQUIRE(oracle::close_rel(rep.second[a][b], fd.second[a][b], 1e-6));
        }
      REQUIRE(rep.normal_residual < 1e-10);
    }
  }
}

TEST_CASE("area and Willmore energy") {
  const double two_pi2 = 2 * pi * pi;
  CHECK(willmore_energy(clifford_torus(), round_s3()) == doctest::Approx(two_pi2).epsilon(1e-12));
  CHECK(std::abs(willmore_energy(clifford_torus(), round_s3()) - 19.7392088) < 1e-7);
  CHECK(willmore_energy(clifford_torus(), hopf_eps(0.6)) == doctest::Approx(1.6 * pi * pi).epsilon(1e-12));
  for (double eps : {0.0, 0.3, 0.9}) {
    const MetricField g = hopf_eps(eps);
    CHECK(std::abs(willmore_energy(clifford_torus(), g) - area(clifford_torus(), g)) < 1e-10);
  }
  // Resolution doubling on the Clifford family.
  SurfaceQuadrature coarse, fine;
  coarse.ns = coarse.nt = 32;
  fine.ns = fine.nt = 64;
  const MetricField g = hopf_eps(0.45);
  CHECK(std::abs(willmore_energy(clifford_torus(), g, coarse) - willmore_energy(clifford_torus(), g, fine)) < 1e-9);

  SurfaceQuadrature q;
  q.ns = q.nt = 48;
  CHECK(area(round_sphere(1.5), flat_r3(), q) == doctest::Approx(4 * pi * 2.25).epsilon(1e-12));
  CHECK(area(torus_of_revolution(2, 1), flat_r3(), q) == doctest::Approx(4 * pi * pi * 2).epsilon(1e-12));
  q.convention = MeanCurvatureConvention::HalfTrace;
  CHECK(willmore_energy(round_sphere(2.0), flat_r3(), q) == doctest::Approx(16 * pi + 4 * pi).epsilon(1e-12));

  SurfaceQuadrature serial = q;
  serial.exec = Execution::Serial;
  CHECK(area(ellipsoid(2, 1.5, 1), flat_r3(), serial) ==
        doctest::Approx(area(ellipsoid(2, 1.5, 1), flat_r3(), q)).epsilon(1e-13));

  CHECK_THROWS_AS(area(saddle(), flat_r3()), DomainError);
  SurfaceQuadrature bounded;
  bounded.bounds = ParamDomain{0, 1, 0, 1, false, false};
  bounded.ns = bounded.nt = 24;
  CHECK(area(graph_surface("0*x", 1.0), flat_r3(), bounded) == doctest::Approx(1.0));
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(fundamental_forms(round_sphere(1.0), flat_r3(), 0.0, 0.3), ImmersionError);
  CHECK_THROWS_AS(fundamental_forms(clifford_torus(), flat_r3(), 0.0, 0.3), DomainError);
  CHECK_THROWS_AS(fundamental_forms(ellipsoid(1, 1, 1), round_s3(), 0.5, 0.3), DomainError);
  CHECK_THROWS_AS(ellipsoid(1, -1, 1), ParameterError);
  CHECK_THROWS_AS(torus_of_revolution(1, 2), ParameterError);
  CHECK_THROWS_AS(surface_by_id("graph", {}), ParameterError);
  CHECK_THROWS_AS(surface_by_id("klein", {}), ParameterError);
  CHECK_THROWS_AS(parallel_surface(clifford_torus(), 0.1), DomainError);
}

TEST_CASE("parallel surfaces shift principal radii") {
  const SurfaceImmersion e = ellipsoid(2, 1.5, 1);
  const double d = 0.3;
  const SurfaceImmersion off = parallel_surface(e, d);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> th(0.2, pi - 0.2), ph(0, 2 * pi);
  for (int n = 0; n < 50; ++n) {
    const double s = th(rng), t = ph(rng);
    const auto a = curvatures(e, flat_r3(), s, t);
    const auto b = curvatures(off, flat_r3(), s, t);
    // Radii of curvature grow by d along the shared normal lines.
    CHECK(1 / b.k1 == doctest::Approx(1 / a.k1 + d).epsilon(1e-9));
    CHECK(1 / b.k2 == doctest::Approx(1 / a.k2 + d).epsilon(1e-9));
    const oracle::FdForms fd = oracle::fd_fundamental_forms(off, flat_r3(), s, t);
    const CurvatureReport rep = fundamental_forms(off, flat_r3(), s, t);
    CHECK(oracle::close_rel(rep.second[0][1], fd.second[0][1], 1e-6));
  }
  const auto sph = curvatures(parallel_surface(round_sphere(1.0), 0.5), flat_r3(), 1.0, 1.0);
  CHECK(sph.k1 == doctest::Approx(1 / 1.5));
}

TEST_CASE("toponogov probe") {
  const std::vector<double> radii{0.25, 0.5, 1.0, 2.0, 4.0};
  for (double v : toponogov_probe(graph_surface("0*x + 0*y", 4), flat_r3(), radii, 40)) CHECK(v == 0.0);
  for (double v : toponogov_probe(paraboloid(), flat_r3(), radii, 40)) CHECK(v < 1e-14);

  const auto sad = toponogov_probe(saddle(), flat_r3(), radii, 80);
  CHECK(sad.front() > 0.5);
  for (std::size_t i = 1; i < sad.size(); ++i) CHECK(sad[i] < sad[i - 1]);
  CHECK(sad.back() < 0.05 * sad.front());
  // Brute-force oracle: the minimum over the disk of radius r sits on its
  // boundary circle; scan the circle with finite-difference forms.
  for (std::size_t i = 0; i < radii.size(); ++i) {
    double best = 1e300;
    for (int k = 0; k < 720; ++k) {
      const double a = 2 * pi * k / 720;
      const auto fd = oracle::fd_fundamental_forms(saddle(), flat_r3(), radii[i] * std::cos(a),
                                                   radii[i] * std::sin(a));
      Eigen::Matrix2d I, II;
      I << fd.first[0][0], fd.first[0][1], fd.first[1][0], fd.first[1][1];
      II << fd.second[0][0], fd.second[0][1], fd.second[1][0], fd.second[1][1];
      const Eigen::Vector2cd ev = (I.inverse() * II).eigenvalues();
      best = std::min(best, std::abs(ev[0].real() - ev[1].real()));
    }
    CHECK(sad[i] >= best * (1 - 1e-6));
    CHECK(sad[i] == doctest::Approx(best).epsilon(0.03));
  }
}
