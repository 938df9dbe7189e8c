#pragma once

// Fixed-size vector/matrix helpers usable with double and dual scalars.

#include <array>
#include <cmath>
#include <cstddef>

#include "ngeo/dual.hpp"

namespace ngeo {

template <class T, std::size_t N>
using VecN = std::array<T, N>;
template <class T, std::size_t N>
using MatN = std::array<std::array<T, N>, N>;

template <class T = double>
using Vec3 = VecN<T, 3>;
template <class T = double>
using Mat3 = MatN<T, 3>;
using Vec2 = VecN<double, 2>;
using Mat2 = MatN<double, 2>;

template <class T, std::size_t N>
T dot(const VecN<T, N>& a, const VecN<T, N>& b) {
  T r = a[0] * b[0];
  for (std::size_t i = 1; i < N; ++i) r += a[i] * b[i];
  return r;
}

template <class T>
Vec3<T> cross(const Vec3<T>& a, const Vec3<T>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

template <class T, std::size_t N>
VecN<T, N> operator+(const VecN<T, N>& a, const VecN<T, N>& b) {
  VecN<T, N> r;
  for (std::size_t i = 0; i < N; ++i) r[i] = a[i] + b[i];
  return r;
}
template <class T, std::size_t N>
VecN<T, N> operator-(const VecN<T, N>& a, const VecN<T, N>& b) {
  VecN<T, N> r;
  for (std::size_t i = 0; i < N; ++i) r[i] = a[i] - b[i];
  return r;
}
template <class T, std::size_t N>
VecN<T, N> operator-(const VecN<T, N>& a) {
  VecN<T, N> r;
  for (std::size_t i = 0; i < N; ++i) r[i] = -a[i];
  return r;
}
template <class T, class S, std::size_t N>
VecN<T, N> operator*(const S& s, const VecN<T, N>& a) {
  VecN<T, N> r;
  for (std::size_t i = 0; i < N; ++i) r[i] = s * a[i];
  return r;
}

template <class T, std::size_t N>
T norm(const VecN<T, N>& a) {
  using std::sqrt;
  return sqrt(dot(a, a));
}

template <class T, std::size_t N>
VecN<T, N> normalized(const VecN<T, N>& a) {
  const T inv = T(1.0) / norm(a);
  return inv * a;
}

/// Drops all derivative information.
template <class T, std::size_t N>
VecN<double, N> values(const VecN<T, N>& a) {
  VecN<double, N> r;
  for (std::size_t i = 0; i < N; ++i) r[i] = value_of(a[i]);
  return r;
}

/// Projects a onto the plane orthogonal to the unit vector u.
template <class T>
Vec3<T> reject(const Vec3<T>& a, const Vec3<T>& u) {
  const T c = dot(a, u);
  return a - c * u;
}

}  // namespace ngeo
