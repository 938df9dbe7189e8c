#include <doctest.h>

#include <cmath>

#include "ngeo/dual.hpp"
#include "ngeo/expr.hpp"

using namespace ngeo;

TEST_CASE("dual numbers carry exact first partials") {
  const D1<2> x = variable1<2>(0.7, 0);
  const D1<2> y = variable1<2>(-1.3, 1);
  const D1<2> f = sin(x) * exp(y) + x / (1.0 + y * y);
  CHECK(f.v == doctest::Approx(std::sin(0.7) * std::exp(-1.3) + 0.7 / (1 + 1.69)));
  CHECK(f.d[0] == doctest::Approx(std::cos(0.7) * std::exp(-1.3) + 1.0 / 2.69));
  CHECK(f.d[1] == doctest::Approx(std::sin(0.7) * std::exp(-1.3) - 0.7 * 2 * -1.3 / (2.69 * 2.69)));
}

TEST_CASE("nested duals give second partials") {
  const D2<2> x = variable2<2>(0.4, 0);
  const D2<2> y = variable2<2>(1.1, 1);
  const D2<2> f = x * x * y + cos(x * y);
  // f_xy = 2x - sin(xy) - xy cos(xy)
  const double xy = 0.44;
  CHECK(f.d[0].d[1] == doctest::Approx(0.8 - std::sin(xy) - xy * std::cos(xy)));
  CHECK(f.d[1].d[0] == doctest::Approx(f.d[0].d[1]));
  // f_xx = 2y - y^2 cos(xy)
  CHECK(f.d[0].d[0] == doctest::Approx(2.2 - 1.21 * std::cos(xy)));
  const D3<1> z = variable3<1>(0.3, 0);
  const D3<1> g = sin(z);
  CHECK(g.d[0].d[0].d[0] == doctest::Approx(-std::cos(0.3)));
}

TEST_CASE("expression grammar") {
  const Expression e = Expression::parse("-x^2 + 2*sin(y)/sqrt(4) - 3^2 + k", {"x", "y"}, {{"k", 0.5}});
  const double v[2] = {1.5, 0.3};
  CHECK(e.eval(v) == doctest::Approx(-2.25 + std::sin(0.3) - 9.0 + 0.5));
  const Expression p = Expression::parse("2^-1 + pi - log(exp(1)) + tan(0) + cos(0)", {});
  CHECK(p.eval<double>(nullptr) == doctest::Approx(0.5 + M_PI - 1.0 + 1.0));
  // Derivatives flow through the AST.
  const D1<1> x = variable1<1>(2.0, 0);
  const Expression q = Expression::parse("x^3", {"x"});
  CHECK(q.eval(&x).d[0] == doctest::Approx(12.0));
  // x^0.5 at zero is not required; integer powers at zero are exact.
  const D1<1> zero = variable1<1>(0.0, 0);
  CHECK(q.eval(&zero).d[0] == 0.0);
}

TEST_CASE("expression errors") {
  CHECK_THROWS_AS(Expression::parse("x +", {"x"}), ParseError);
  CHECK_THROWS_AS(Expression::parse("foo(1)", {"x"}), ParseError);
  CHECK_THROWS_AS(Expression::parse("(x", {"x"}), ParseError);
  CHECK_THROWS_AS(Expression::parse("x $ 2", {"x"}), ParseError);
}
