#pragma once

#include <functional>
#include <vector>

#include "ngeo/parallel.hpp"

namespace ngeo {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t size() const { return nodes.size(); }
};

/// n-point Gauss-Legendre rule on [a, b].
QuadratureRule gauss_legendre(int n, double a, double b);

/// Composite Gauss-Legendre: one `order`-point panel between consecutive
/// breakpoints. `breaks` must be sorted and contain both endpoints.
QuadratureRule composite_gauss_legendre(const std::vector<double>& breaks, int order);

/// n equispaced nodes a + i(b-a)/n with equal weights; spectrally accurate
/// for smooth (b-a)-periodic integrands.
QuadratureRule periodic_trapezoid(int n, double a, double b);

/// Tensor-product sum  sum_ijk wx_i wy_j wz_k f(x_i, y_j, z_k).
/// The parallel path reduces per-i partial sums pairwise.
double tensor_quadrature_3d(const QuadratureRule& rx, const QuadratureRule& ry,
                            const QuadratureRule& rz,
                            const std::function<double(double, double, double)>& f,
                            Execution exec = Execution::Parallel);

double tensor_quadrature_2d(const QuadratureRule& rx, const QuadratureRule& ry,
                            const std::function<double(double, double)>& f,
                            Execution exec = Execution::Parallel);

}  // namespace ngeo
