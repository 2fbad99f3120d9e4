#pragma once

#include <vector>

#include "homog/linalg.hpp"
#include "homog/mesh_space.hpp"

namespace homog {

struct Connectivity {
  bool connected = false;
  int components = 0;
};

/// Connected components of the DOF graph in which two DOFs are adjacent when
/// they share an element.
Connectivity check_connectivity(const DiscreteSpace& sp);

/// HypothesisError when the support falls apart into several pieces.
void require_connected(const DiscreteSpace& sp);

/// Tensor grid of `points` values per axis, -pi + 2 pi i / points, so -pi is
/// always included. Axis 0 varies fastest.
std::vector<RVec> default_kappa_grid(int dim, int points = 9);

struct PoincareOptions {
  EigenOptions eigen;
  int workers = 1;
};

struct PoincareSample {
  RVec kappa;
  double lambda = 0.0;
};

struct PoincareEstimate {
  double lambda_min = 0.0;
  RVec kappa_argmin;
  double C_P = 0.0;  // lambda_min^{-1/2}
  std::vector<PoincareSample> samples;
};

/// Smallest eigenvalue of S_1(kappa) v = lambda M v over mean-zero v, where
/// S_1 is the shifted stiffness with A = 1.
double mean_zero_eigenvalue(const DiscreteSpace& sp, const RVec& kappa, const EigenOptions& opts = {});

/// Minimum of `mean_zero_eigenvalue` over the grid. Ties go to the first
/// grid point.
PoincareEstimate poincare_constant(const DiscreteSpace& sp, const std::vector<RVec>& kappas,
                                   const PoincareOptions& opts = {});

}  // namespace homog
