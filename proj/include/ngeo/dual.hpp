#pragma once

// Forward-mode dual numbers. Nesting Dual<Dual<double, N>, N> yields exact
// second partials; one more level yields third partials.

#include <array>
#include <cmath>
#include <type_traits>

namespace ngeo {

template <class T, int N>
struct Dual {
  T v{};
  std::array<T, N> d{};

  Dual() = default;
  Dual(double x) : v(x) {}  // NOLINT(google-explicit-constructor)
  Dual(const T& x, const std::array<T, N>& g) : v(x), d(g) {}

  template <class U = T, std::enable_if_t<!std::is_same_v<U, double>, int> = 0>
  Dual(const U& x) : v(x) {}  // NOLINT(google-explicit-constructor)

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) { return *this = *this * o; }
  Dual& operator/=(const Dual& o) { return *this = *this / o; }

  friend Dual operator-(const Dual& a) {
    Dual r;
    r.v = -a.v;
    for (int i = 0; i < N; ++i) r.d[i] = -a.d[i];
    return r;
  }
  friend Dual operator+(Dual a, const Dual& b) { return a += b; }
  friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
  friend Dual operator*(const Dual& a, const Dual& b) {
    Dual r;
    r.v = a.v * b.v;
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    return r;
  }
  friend Dual operator/(const Dual& a, const Dual& b) {
    Dual r;
    const T inv = T(1.0) / b.v;
    r.v = a.v * inv;
    for (int i = 0; i < N; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) * inv;
    return r;
  }
  friend Dual operator+(Dual a, double b) { a.v += b; return a; }
  friend Dual operator+(double b, Dual a) { a.v += b; return a; }
  friend Dual operator-(Dual a, double b) { a.v -= b; return a; }
  friend Dual operator-(double b, const Dual& a) { return Dual(b) - a; }
  friend Dual operator*(Dual a, double b) {
    a.v *= b;
    for (auto& x : a.d) x *= b;
    return a;
  }
  friend Dual operator*(double b, Dual a) { return a * b; }
  friend Dual operator/(Dual a, double b) { return a * (1.0 / b); }
  friend Dual operator/(double b, const Dual& a) { return Dual(b) / a; }
};

template <class T>
struct is_dual : std::false_type {};
template <class T, int N>
struct is_dual<Dual<T, N>> : std::true_type {};

/// Innermost real value of a (possibly nested) dual.
inline double value_of(double x) { return x; }
template <class T, int N>
double value_of(const Dual<T, N>& x) {
  return value_of(x.v);
}

namespace detail {
// Applies a scalar function with known derivative: f(a) with f'(a) given.
template <class T, int N, class F, class DF>
Dual<T, N> chain(const Dual<T, N>& a, F f, DF df) {
  Dual<T, N> r;
  r.v = f(a.v);
  const T slope = df(a.v);
  for (int i = 0; i < N; ++i) r.d[i] = slope * a.d[i];
  return r;
}
}  // namespace detail

using std::abs;
using std::atan2;
using std::cos;
using std::exp;
using std::log;
using std::pow;
using std::sin;
using std::sqrt;
using std::tan;

template <class T, int N>
Dual<T, N> sin(const Dual<T, N>& a) {
  return detail::chain(a, [](const T& x) { using std::sin; return sin(x); },
                       [](const T& x) { using std::cos; return cos(x); });
}
template <class T, int N>
Dual<T, N> cos(const Dual<T, N>& a) {
  return detail::chain(a, [](const T& x) { using std::cos; return cos(x); },
                       [](const T& x) { using std::sin; return -sin(x); });
}
template <class T, int N>
Dual<T, N> tan(const Dual<T, N>& a) {
  return detail::chain(a, [](const T& x) { using std::tan; return tan(x); },
                       [](const T& x) {
                         using std::cos;
                         const T c = cos(x);
                         return T(1.0) / (c * c);
                       });
}
template <class T, int N>
Dual<T, N> exp(const Dual<T, N>& a) {
  return detail::chain(a, [](const T& x) { using std::exp; return exp(x); },
                       [](const T& x) { using std::exp; return exp(x); });
}
template <class T, int N>
Dual<T, N> log(const Dual<T, N>& a) {
  return detail::chain(a, [](const T& x) { using std::log; return log(x); },
                       [](const T& x) { return T(1.0) / x; });
}
template <class T, int N>
Dual<T, N> sqrt(const Dual<T, N>& a) {
  return detail::chain(a, [](const T& x) { using std::sqrt; return sqrt(x); },
                       [](const T& x) {
                         using std::sqrt;
                         return T(0.5) / sqrt(x);
                       });
}
template <class T, int N>
Dual<T, N> pow(const Dual<T, N>& a, double p) {
  return detail::chain(a, [p](const T& x) { using std::pow; return pow(x, p); },
                       [p](const T& x) {
                         using std::pow;
                         return p * pow(x, p - 1.0);
                       });
}
template <class T, int N>
Dual<T, N> abs(const Dual<T, N>& a) {
  return value_of(a) < 0.0 ? -a : a;
}

/// Integer power by repeated multiplication; exact for duals at zero.
template <class T>
T ipow(const T& x, int n) {
  if (n == 0) return T(1.0);
  if (n < 0) return T(1.0) / ipow(x, -n);
  T r = x;
  for (int i = 1; i < n; ++i) r = r * x;
  return r;
}

template <int N>
using D1 = Dual<double, N>;
template <int N>
using D2 = Dual<Dual<double, N>, N>;
template <int N>
using D3 = Dual<Dual<Dual<double, N>, N>, N>;

/// Seeds the i-th independent variable of an N-variable first-order jet.
template <int N>
D1<N> variable1(double x, int i) {
  D1<N> r(x);
  r.d[i] = 1.0;
  return r;
}

/// Seeds the i-th variable of a second-order (hyper-dual) jet.
template <int N>
D2<N> variable2(double x, int i) {
  D2<N> r;
  r.v = variable1<N>(x, i);
  r.d[i] = D1<N>(1.0);
  return r;
}

/// Seeds the i-th variable of a third-order jet.
template <int N>
D3<N> variable3(double x, int i) {
  D3<N> r;
  r.v = variable2<N>(x, i);
  r.d[i] = D2<N>(1.0);
  return r;
}

}  // namespace ngeo
