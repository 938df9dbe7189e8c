#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "ngeo/chart_tensor.hpp"
#include "ngeo/quadrature.hpp"
#include "oracles.hpp"

using namespace ngeo;
using std::numbers::pi;

using fixture::random_hopf_point;

TEST_CASE("eval_metric closed forms") {
  const auto flat = flat_r3().components({{0.3, -2.0, 7.0}});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(flat[i][j] == (i == j ? 1.0 : 0.0));

  const double eps = 0.37;
  const auto g = hopf_eps(eps).components({{pi / 4, 1.0, 2.0}});
  CHECK(g[0][0] == doctest::Approx(1.0));
  CHECK(g[1][1] == doctest::Approx(0.5));
  CHECK(g[2][2] == doctest::Approx(0.5));
  CHECK(g[1][2] == doctest::Approx(eps / 2));
  CHECK(g[2][1] == g[1][2]);
  CHECK(g[0][1] == 0.0);

  std::mt19937_64 rng(7);
  const MetricField zero = hopf_eps(0.0), round = round_s3();
  for (int k = 0; k < 50; ++k) {
    const Vec3<double> p = random_hopf_point(rng);
    const auto a = zero.components({p});
    const auto b = round.components({p});
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(a[i][j] == b[i][j]);
  }
}

TEST_CASE("eval_metric errors") {
  CHECK_THROWS_AS(hopf_eps(1.0), ParameterError);
  CHECK_THROWS_AS(hopf_eps_bumped(1.2), ParameterError);
  CHECK_THROWS_AS(hopf_eps(-0.1), ParameterError);
  CHECK_THROWS_AS(round_s3().components({{0.0, 0.0, 0.0}}), DomainError);
  CHECK_THROWS_AS(round_s3().components({{pi / 2 + 0.1, 0.0, 0.0}}), DomainError);
  CHECK_THROWS_AS(metric_by_id("hopf-eps", {}), ParameterError);
  CHECK_THROWS_AS(metric_by_id("nope", {}), ParameterError);
  // Periodic axes accept any angle.
  CHECK_NOTHROW(round_s3().components({{0.5, -20.0, 40.0}}));
}

TEST_CASE("christoffel symbols") {
  const auto flat = christoffel(flat_r3(), {{1.0, 2.0, 3.0}});
  for (const auto& m : flat)
    for (const auto& row : m)
      for (double v : row) CHECK(v == 0.0);

  const Vec3<double> p{pi / 4, 0.3, 1.2};
  const auto gamma = christoffel(round_s3(), {p});
  const auto fd = oracle::fd_christoffel(round_s3(), p);
  // Frozen from the finite-difference oracle: -sin(pi/4) cos(pi/4).
  CHECK(fd[0][1][1] == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(gamma[0][1][1] == doctest::Approx(-0.5).epsilon(1e-12));

  std::mt19937_64 rng(11);
  const MetricField m = hopf_eps(0.3);
  for (int n = 0; n < 100; ++n) {
    const auto G = christoffel(m, {random_hopf_point(rng)});
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(G[k][i][j] == G[k][j][i]);
  }
}

TEST_CASE("analytic partials agree with central differences") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const std::vector<MetricField> metrics{flat_r3(), round_s3(), hopf_eps(0.6), hopf_eps_bumped(0.4)};
  for (const auto& m : metrics) {
    for (int n = 0; n < 1000; ++n) {
      Vec3<double> p = m.chart().kind == ChartKind::Hopf ? random_hopf_point(rng)
                                                         : Vec3<double>{u(rng), u(rng), u(rng)};
      const MetricJet jet = m.jet({p});
      const auto fd = oracle::fd_metric_partials(m, p);
      for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) REQUIRE(oracle::close_rel(jet.dg[k][i][j], fd[k][i][j], 1e-6));
      // symmetric, positive definite
      Eigen::Matrix3d g;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          g(i, j) = jet.g[i][j];
          REQUIRE(jet.g[i][j] == jet.g[j][i]);
        }
      REQUIRE(Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(g).eigenvalues().minCoeff() > 0.0);
    }
  }
}

TEST_CASE("bump profile") {
  for (double eps : {0.05, 0.2, 0.5, 0.9}) {
    const BumpProfile b{eps};
    CHECK(bump_profile(pi / 4, b) == 1.0);
    CHECK(bump_profile(pi / 4 + eps, b) == 0.0);
    CHECK(bump_profile(pi / 4 - eps, b) == 0.0);
    for (double edge : {eps / 4, eps / 2}) {
      for (double side : {-1.0, 1.0}) {
        const double at = pi / 4 + side * edge;
        CHECK(std::abs(bump_profile(at + 1e-9, b) - bump_profile(at - 1e-9, b)) < 1e-12);
      }
    }
    for (int i = 0; i <= 400; ++i) {
      const double v = bump_profile(pi / 4 - eps + 2 * eps * i / 400.0, b);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  // Derivatives through the dual path vanish on the flat top.
  const auto d = BumpProfile{0.4}(variable1<1>(pi / 4 + 0.05, 0));
  CHECK(d.d[0] == 0.0);
}

TEST_CASE("pointwise tensor norm against hand expansion") {
  for (double eps : {0.1, 0.5, 0.8}) {
    const Vec3<double> p{pi / 4, 0.0, 0.0};
    const auto g1 = round_s3().components({p});
    const auto ge = hopf_eps(eps).components({p});
    Mat3<double> diff{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) diff[i][j] = g1[i][j] - ge[i][j];
    // Only dg_12 = dg_21 = eps sin cos is nonzero: 2 g^11 g^22 dg_12^2 = 2 eps^2.
    CHECK(tensor_norm_sq(diff, g1) == doctest::Approx(2 * eps * eps).epsilon(1e-13));
  }
}

TEST_CASE("l2 metric distance") {
  L2DistanceOptions opt;
  opt.resolution = 24;
  CHECK(l2_metric_distance(hopf_eps(0.3), hopf_eps(0.3), round_s3(), opt) == 0.0);
  CHECK_THROWS_AS(l2_metric_distance(flat_r3(), round_s3(), round_s3(), opt), DomainError);

  std::vector<double> values;
  for (double eps : {0.1, 0.2, 0.4}) {
    const double ab = l2_metric_distance(round_s3(), hopf_eps_bumped(eps), round_s3(), opt);
    const double ba = l2_metric_distance(hopf_eps_bumped(eps), round_s3(), round_s3(), opt);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-14));
    CHECK(ab > 0.0);
    CHECK(ab <= 16 * pi * pi * eps * eps * eps);
    values.push_back(ab);
  }
  // Unbumped eps metric: 2 * int 2 eps^2 sin cos = 4 eps^2 (2pi)^2 * 1/2 = 8 pi^2 eps^2.
  const double full = l2_metric_distance(round_s3(), hopf_eps(0.2), round_s3(), opt);
  CHECK(full == doctest::Approx(8 * pi * pi * 0.04).epsilon(1e-9));
  // Close to cubic scaling.
  const double slope = std::log(values[2] / values[0]) / std::log(4.0);
  CHECK(slope == doctest::Approx(3.0).epsilon(0.07));
}

TEST_CASE("parallel quadrature matches the serial reference") {
  const QuadratureRule a = gauss_legendre(20, 0.0, 1.0), b = periodic_trapezoid(17, 0.0, 2 * pi);
  auto f = [](double x, double y, double z) { return std::exp(x) * std::cos(y) * std::cos(y) + z; };
  const double ser = tensor_quadrature_3d(a, b, a, f, Execution::Serial);
  const double par = tensor_quadrature_3d(a, b, a, f, Execution::Parallel);
  CHECK(par == doctest::Approx(ser).epsilon(1e-13));
  CHECK(par == tensor_quadrature_3d(a, b, a, f, Execution::Parallel));
  CHECK(par == doctest::Approx((std::exp(1.0) - 1.0) * pi + 0.5 * 2 * pi).epsilon(1e-12));
  const QuadratureRule gl = gauss_legendre(7, -1.0, 1.0);
  double m = 0;
  for (std::size_t i = 0; i < gl.size(); ++i) m += gl.weights[i] * std::pow(gl.nodes[i], 12);
  CHECK(m == doctest::Approx(2.0 / 13.0).epsilon(1e-14));
}

TEST_CASE("custom metric expressions reproduce a built-in family") {
  const MetricField custom = metric_from_expressions(
      "hopf",
      {{"g11", "1"}, {"g22", "sin(rho)^2"}, {"g33", "cos(rho)^2"}, {"g23", "eps*sin(rho)*cos(rho)"}},
      {{"eps", 0.45}});
  const MetricField ref = hopf_eps(0.45);
  std::mt19937_64 rng(5);
  for (int n = 0; n < 20; ++n) {
    const Vec3<double> p = random_hopf_point(rng);
    const MetricJet a = custom.jet({p}), b = ref.jet({p});
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        CHECK(a.g[i][j] == doctest::Approx(b.g[i][j]).epsilon(1e-14));
        for (int k = 0; k < 3; ++k) CHECK(a.dg[k][i][j] == doctest::Approx(b.dg[k][i][j]).epsilon(1e-12));
      }
  }
  CHECK_THROWS_AS(metric_from_expressions("hopf", {{"g44", "1"}}, {}), ParseError);
  CHECK_THROWS_AS(metric_from_expressions("polar", {{"g11", "1"}}, {}), ParseError);

  const auto path = std::filesystem::temp_directory_path() / "ngeo_metric_test.json";
  {
    std::ofstream out(path);
    out << R"({"chart": "cartesian", "params": {"a": 2}, "components": {"g11": "a", "g22": "1 + x^2", "g33": "1"}})";
  }
  const MetricField loaded = load_metric_file(path.string());
  CHECK(loaded.components({{3.0, 0.0, 0.0}})[1][1] == doctest::Approx(10.0));
  CHECK(loaded.components({{3.0, 0.0, 0.0}})[0][0] == doctest::Approx(2.0));
  {
    std::ofstream out(path);
    out << R"({"chart": "cartesian", "colour": 1, "components": {}})";
  }
  CHECK_THROWS_AS(load_metric_file(path.string()), ParseError);
  std::filesystem::remove(path);
}
