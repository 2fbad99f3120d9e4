#pragma once

#include <vector>

namespace homog {

/// Gauss-Legendre rule on the unit interval [0, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// `points`-point rule, exact for polynomials of degree 2*points - 1.
GaussRule gauss_legendre(int points);

/// Smallest number of points whose rule is exact up to `order`.
int gauss_points_for_order(int order);

}  // namespace homog
