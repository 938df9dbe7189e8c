#include "ngeo/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ngeo/error.hpp"

namespace ngeo {

int hardware_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

// Legendre P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0;
  double p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

}  // namespace

QuadratureRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw ParameterError("Gauss-Legendre order must be positive");
  QuadratureRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = mid - half * x;
    r.nodes[n - 1 - i] = mid + half * x;
    r.weights[i] = half * w;
    r.weights[n - 1 - i] = half * w;
  }
  return r;
}

QuadratureRule composite_gauss_legendre(const std::vector<double>& breaks, int order) {
  if (breaks.size() < 2) throw ParameterError("composite rule needs at least two breakpoints");
  QuadratureRule r;
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    if (!(breaks[p + 1] > breaks[p])) continue;
    const QuadratureRule panel = gauss_legendre(order, breaks[p], breaks[p + 1]);
    r.nodes.insert(r.nodes.end(), panel.nodes.begin(), panel.nodes.end());
    r.weights.insert(r.weights.end(), panel.weights.begin(), panel.weights.end());
  }
  return r;
}

QuadratureRule periodic_trapezoid(int n, double a, double b) {
  if (n < 1) throw ParameterError("trapezoid rule needs at least one node");
  QuadratureRule r;
  r.nodes.resize(n);
  r.weights.assign(n, (b - a) / n);
  for (int i = 0; i < n; ++i) r.nodes[i] = a + (b - a) * i / n;
  return r;
}

double tensor_quadrature_3d(const QuadratureRule& rx, const QuadratureRule& ry,
                            const QuadratureRule& rz,
                            const std::function<double(double, double, double)>& f,
                            Execution exec) {
  const int nx = static_cast<int>(rx.size());
  if (exec == Execution::Serial) {
    double total = 0.0;
    for (int i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ry.size(); ++j)
        for (std::size_t k = 0; k < rz.size(); ++k)
          total += rx.weights[i] * ry.weights[j] * rz.weights[k] *
                   f(rx.nodes[i], ry.nodes[j], rz.nodes[k]);
    return total;
  }
  std::vector<double> slab(nx, 0.0);
  for_each_index(Execution::Parallel, nx, [&](int i) {
    std::vector<double> row(ry.size());
    for (std::size_t j = 0; j < ry.size(); ++j) {
      std::vector<double> line(rz.size());
      for (std::size_t k = 0; k < rz.size(); ++k)
        line[k] = rz.weights[k] * f(rx.nodes[i], ry.nodes[j], rz.nodes[k]);
      row[j] = ry.weights[j] * pairwise_sum(line);
    }
    slab[i] = rx.weights[i] * pairwise_sum(row);
  });
  return pairwise_sum(slab);
}

double tensor_quadrature_2d(const QuadratureRule& rx, const QuadratureRule& ry,
                            const std::function<double(double, double)>& f, Execution exec) {
  const int nx = static_cast<int>(rx.size());
  if (exec == Execution::Serial) {
    double total = 0.0;
    for (int i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ry.size(); ++j)
        total += rx.weights[i] * ry.weights[j] * f(rx.nodes[i], ry.nodes[j]);
    return total;
  }
  std::vector<double> slab(nx, 0.0);
  for_each_index(Execution::Parallel, nx, [&](int i) {
    std::vector<double> row(ry.size());
    for (std::size_t j = 0; j < ry.size(); ++j) row[j] = ry.weights[j] * f(rx.nodes[i], ry.nodes[j]);
    slab[i] = rx.weights[i] * pairwise_sum(row);
  });
  return pairwise_sum(slab);
}

}  // namespace ngeo
