#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <sstream>

#include "ngeo/error.hpp"
#include "ngeo/neutral_flow.hpp"

using namespace ngeo;

namespace {

Vec4 random_q(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> x(-0.6, 0.6), e(-1.0, 1.0);
  return {x(gen), x(gen), e(gen), e(gen)};
}

std::shared_ptr<const FiberSection> twisted_zero(double s) {
  return std::make_shared<const FiberSection>(zero_fiber_section(s));
}

std::shared_ptr<const FiberSection> twisted_ellipsoid(double s) {
  return std::make_shared<const FiberSection>(ellipsoid_fiber_section(2, 1, 1.5, s));
}

double max_change(const FlowState& a, const FlowState& b) {
  double d = 0;
  for (std::size_t k = 0; k < a.q.size(); ++k) d = std::max(d, (a.q[k] - b.q[k]).cwiseAbs().maxCoeff());
  return d;
}

}  // namespace

TEST_CASE("flow coordinates reproduce lines, tangents and the neutral metric") {
  std::mt19937_64 gen(7);
  for (int n = 0; n < 200; ++n) {
    const Vec4 q = random_q(gen);
    const OrientedLine l = line_at(q);
    CHECK(std::abs(norm(l.u) - 1.0) < 1e-14);
    CHECK(std::abs(dot(l.u, l.V)) < 1e-14);
    Vec4 dq = random_q(gen);
    const LineTangent t = tangent_at(q, dq);
    const double h = 1e-6;
    const OrientedLine lp = line_at(q + h * dq), lm = line_at(q - h * dq);
    for (int k = 0; k < 3; ++k) {
      CHECK(t.du[k] == doctest::Approx((lp.u[k] - lm.u[k]) / (2 * h)).epsilon(1e-7));
      CHECK(t.dV[k] == doctest::Approx((lp.V[k] - lm.V[k]) / (2 * h)).epsilon(1e-7));
    }
    const Eigen::Matrix4d g = flow_metric(q);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        CHECK(g(i, j) == doctest::Approx(neutral_metric(tangent_at(q, Vec4::Unit(i)), tangent_at(q, Vec4::Unit(j))))
                             .epsilon(1e-12));
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(g);
    const auto ev = es.eigenvalues();
    CHECK((ev[0] < 0 && ev[1] < 0 && ev[2] > 0 && ev[3] > 0));
  }
}

TEST_CASE("flow Christoffel symbols match finite differences of the metric") {
  std::mt19937_64 gen(8);
  for (int n = 0; n < 100; ++n) {
    const Vec4 q = random_q(gen);
    const double h = 1e-5;
    std::array<Eigen::Matrix4d, 4> dg;
    for (int k = 0; k < 4; ++k)
      dg[k] = (flow_metric(q + h * Vec4::Unit(k)) - flow_metric(q - h * Vec4::Unit(k))) / (2 * h);
    const Eigen::Matrix4d gi = flow_metric(q).inverse();
    const auto gamma = flow_christoffel(q);
    for (int k = 0; k < 4; ++k)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          double ref = 0;
          for (int l = 0; l < 4; ++l) ref += 0.5 * gi(k, l) * (dg[i](l, j) + dg[j](l, i) - dg[l](i, j));
          CHECK(gamma[k](i, j) == doctest::Approx(ref).epsilon(1e-6).scale(1.0));
        }
  }
}

TEST_CASE("twisted zero section has fiber coordinates eta = -i s xi") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> x(-0.7, 0.7);
  for (double s : {0.5, 1.0, 2.5}) {
    const FiberSection f = zero_fiber_section(s);
    for (int n = 0; n < 50; ++n) {
      const Vec2 xi{x(gen), x(gen)};
      const Vec2 e = f.eta(xi);
      CHECK(e[0] == doctest::Approx(s * xi[1]).epsilon(1e-13));
      CHECK(e[1] == doctest::Approx(-s * xi[0]).epsilon(1e-13));
      const OrientedLine l = line_at(f.point(xi));
      const Vec3<double> expect = s * cross(l.u, Vec3<double>{0, 0, 1});
      for (int k = 0; k < 3; ++k) CHECK(std::abs(l.V[k] - expect[k]) < 1e-13);
    }
  }
}

TEST_CASE("fiber section agrees with its line-space section and projects onto itself") {
  const FiberSection f = ellipsoid_fiber_section(2, 1, 1.5, 3.0);
  const LineSection ls = f.as_line_section(0.9);
  std::mt19937_64 gen(10);
  std::uniform_real_distribution<double> x(-0.6, 0.6);
  for (int n = 0; n < 50; ++n) {
    const Vec2 xi{x(gen), x(gen)};
    const OrientedLine a = line_at(f.point(xi));
    const OrientedLine b = ls.jet(xi[0], xi[1]).line;
    for (int k = 0; k < 3; ++k) {
      CHECK(std::abs(a.u[k] - b.u[k]) < 1e-13);
      CHECK(std::abs(a.V[k] - b.V[k]) < 1e-12);
    }
    const Vec4 p = f.point(xi);
    CHECK((f.project(p) - p).norm() < 1e-14);
    const Vec4 off = p + Vec4(0.01, -0.02, 0.03, 0.01);
    const Vec4 back = f.project(off, 8);
    const Vec2 e = f.eta({back[0], back[1]});
    CHECK(std::abs(e[0] - back[2]) < 1e-14);
    CHECK(std::abs(e[1] - back[3]) < 1e-14);
  }
  CHECK_THROWS_AS(f.project(f.point({1.2, 0.1})), ProjectionError);
}

TEST_CASE("maximal disc in the twisted zero section is stationary") {
  FlowState s = initial_disc(twisted_zero(1.0), 21, 0.5);
  s.params.angle_target = 0.0;
  s.h = stable_step(s);
  const MeanCurvatureField mh = mean_curvature_vector(s);
  CHECK(mh.max_norm < 1e-8);
  CHECK(mh.margin > 0);
  FlowState cur = s;
  for (int k = 0; k < 20; ++k) {
    const FlowState next = flow_step(cur);
    CHECK(max_change(cur, next) < 1e-10);
    cur = next;
  }
  CHECK(max_change(s, cur) < 20 * 1e-10);
}

TEST_CASE("mean curvature vector is G-normal on a perturbed disc") {
  FlowState s = initial_disc(twisted_ellipsoid(4.0), 21, 0.5, {0.08, -0.05});
  const MeanCurvatureField mh = mean_curvature_vector(s);
  CHECK(mh.max_norm > 1e-3);
  CHECK(mh.normal_residual < 1e-8);
}

TEST_CASE("perturbed flat disc: flow decreases max |H|") {
  FlowState s = initial_disc(twisted_zero(1.0), 21, 0.5, {0.05, -0.03});
  s.params.angle_target = 0.0;
  s.h = stable_step(s);
  const FlowRun run = run_flow(s, 100);
  REQUIRE(run.termination == "budget");
  const auto& hist = run.state.history;
  REQUIRE(hist.size() == 101);
  CHECK(hist.back().max_h < 0.5 * hist.front().max_h);
  for (std::size_t k = 1; k < hist.size(); ++k) {
    CHECK(hist[k].area - hist[k - 1].area >= -1e-10);
    CHECK(hist[k].margin > 0);
    CHECK(hist[k].normal_residual < 1e-8);
  }
}

TEST_CASE("angle penalty iteration reduces the boundary residual") {
  for (double b : {0.1, 0.3}) {
    FlowState s = initial_disc(twisted_ellipsoid(4.26), 25, 0.5, {0.05, -0.025});
    s.params.angle_target = b;
    const double r0 = boundary_angles(s).angle_residual;
    const auto hist = angle_penalty_iterations(s, 20, 0.5);
    for (std::size_t k = 3; k < hist.size(); ++k) CHECK(hist[k] <= hist[k - 1]);
    CHECK(hist.back() < 0.7 * r0);
    for (int i = 0; i < s.n; ++i)
      for (int j = 0; j < s.n; ++j)
        if (s.boundary(i, j)) {
          const Vec4& q = s.at(i, j);
          const Vec2 e = s.target->eta({q[0], q[1]});
          CHECK(std::abs(e[0] - q[2]) + std::abs(e[1] - q[3]) < 1e-12);
        }
  }
}

TEST_CASE("run_flow bookkeeping") {
  FlowConfig c;
  c.grid = 13;
  c.steps = 0;
  const FlowRun zero = run_flow(c);
  CHECK(zero.termination == "budget");
  REQUIRE(zero.state.history.size() == 1);
  CHECK(zero.state.t == 0.0);
  const FlowState d0 = initial_disc(zero.state.target, 13, 0.5);
  CHECK(max_change(zero.state, d0) == 0.0);

  c.steps = 10;
  c.snapshot_every = 5;
  const FlowRun r = run_flow(c);
  CHECK(r.state.history.size() == 11);
  CHECK(r.snapshots.size() == 2);
  for (const auto& d : r.state.history) {
    CHECK(std::isfinite(d.area));
    CHECK(std::isfinite(d.margin));
    CHECK(std::isfinite(d.angle_residual));
    CHECK(std::isfinite(d.dbar_norm));
    CHECK(d.dbar_target == doctest::Approx(c.holo_constant / (1 + d.t)));
  }

  c.stagnation_tol = 1e9;
  CHECK(run_flow(c).termination == "stagnation");

  std::ostringstream csv;
  write_flow_csv(csv, r.state.history);
  CHECK(csv.str().rfind("step,t,h,area,margin,angle_residual,dbar_norm,dbar_target,dbar_violation,max_H,"
                        "normal_residual,backtracks\n",
                        0) == 0);
  std::ostringstream snap;
  write_flow_snapshot(snap, r.state);
  const std::string text = snap.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 13 * 13);
}

TEST_CASE("signature loss halts the flow with the state preserved") {
  // The untwisted zero section is totally null.
  FlowState s = initial_disc(twisted_zero(0.0), 11, 0.5);
  s.h = 1e-4;
  CHECK_THROWS_AS(mean_curvature_vector(s), SignatureLossError);
  CHECK_THROWS_AS(flow_step(s), SignatureLossError);
  s.history.push_back({});
  s.history.back().max_h = 1.0;
  const FlowRun r = run_flow(s, 5);
  CHECK(r.termination == "signature-loss");
  CHECK(max_change(r.state, s) == 0.0);
}

TEST_CASE("halving the step changes the state at fixed time by O(h)") {
  auto run_to = [](double h, int steps) {
    FlowState s = initial_disc(twisted_zero(1.0), 13, 0.5, {0.05, -0.03});
    s.params.penalty = false;
    s.h = h;
    return run_flow(s, steps).state;
  };
  const double h = stable_step(initial_disc(twisted_zero(1.0), 13, 0.5, {0.05, -0.03}));
  const FlowState a = run_to(h, 20), b = run_to(h / 2, 40), c = run_to(h / 4, 80);
  const double d1 = max_change(a, b), d2 = max_change(b, c);
  CHECK(d1 > 0);
  CHECK(d1 / d2 == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("serial and parallel flow steps agree bitwise") {
  FlowState s = initial_disc(twisted_ellipsoid(4.0), 17, 0.5, {0.05, -0.02});
  s.h = stable_step(s);
  FlowState p = s;
  s.params.exec = Execution::Serial;
  p.params.exec = Execution::Parallel;
  for (int k = 0; k < 3; ++k) {
    s = flow_step(s);
    p = flow_step(p);
  }
  CHECK(max_change(s, p) == 0.0);
  CHECK(induced_area(s) == induced_area(p));
}

TEST_CASE("flow config parsing") {
  const FlowConfig c = parse_flow_config(R"({"grid": 17, "steps": 20, "angle_target": 0.2, "section": "zero"})");
  CHECK(c.grid == 17);
  CHECK(c.steps == 20);
  CHECK(c.angle_target == 0.2);
  CHECK(c.section == "zero");
  CHECK(c.cfl == 0.2);
  CHECK_THROWS_AS(parse_flow_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_flow_config("[]"), ConfigError);
  CHECK_THROWS_AS(parse_flow_config(R"({"grid": "x"})"), ConfigError);
  CHECK_THROWS_AS(parse_flow_config(R"({"grid": 3})"), ConfigError);
  CHECK_THROWS_AS(parse_flow_config(R"({"half_width": 0.8})"), ConfigError);
  CHECK_THROWS_AS(parse_flow_config(R"({"section": "torus"})"), ConfigError);
  CHECK_THROWS_AS(parse_flow_config(R"({"holo_constant": 0})"), ConfigError);
  try {
    parse_flow_config(R"({"gird": 3})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("gird") != std::string::npos);
    CHECK(msg.find("grid") != std::string::npos);
  }
  FlowConfig big;
  big.grid = 11;
  big.h = 1.0;
  CHECK_THROWS_AS(run_flow(big), ConfigError);
  CHECK_THROWS_AS(load_flow_config("/nonexistent/flow.json"), ConfigError);
  CHECK_THROWS_AS(initial_disc(twisted_zero(1.0), 4, 0.5), ParameterError);
  CHECK_THROWS_AS(initial_disc(twisted_zero(1.0), 11, 0.75), ParameterError);
}
