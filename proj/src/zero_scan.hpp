#pragma once

// Grid search for the zeros of a non-negative field whose square is smooth:
// local minima, iterated quadratic refinement, isolation test, merging.

#include <functional>
#include <string>
#include <vector>

#include "ngeo/surface_geom.hpp"

namespace ngeo::detail {

struct ZeroField {
  ParamDomain domain;
  int ns = 0, nt = 0;
  std::vector<double> grid;                 ///< cell-centred samples, NaN if inactive
  std::function<double(Vec2)> eval;         ///< NaN outside the active set
  double tol = 0.0;

  double ds() const { return domain.length_s() / ns; }
  double dt() const { return domain.length_t() / nt; }
  Vec2 center(int i, int j) const {
    return {domain.s0 + (i + 0.5) * ds(), domain.t0 + (j + 0.5) * dt()};
  }
};

struct Zero {
  Vec2 location{};
  double value = 0.0;
  bool isolated = true;
  bool near_boundary = false;  ///< next to an inactive cell or a bounded edge
};

struct ZeroScan {
  std::vector<Zero> zeros;  ///< sorted by location
  std::vector<std::string> warnings;
};

ZeroScan find_zeros(const ZeroField& field);

double wrap(double v, double lo, double hi);

}  // namespace ngeo::detail
