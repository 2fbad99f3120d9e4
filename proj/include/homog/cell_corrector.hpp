#pragma once

#include <vector>

#include <Eigen/Core>

#include "homog/mesh_space.hpp"

namespace homog {

struct CorrectorSet {
  std::vector<RVec> N;                   // one coefficient vector per axis
  std::vector<std::vector<double>> gradN;  // per axis, num_qps x d, free axes only
  double residual = 0.0;                 // max relative residual of the cell solves
  double side_condition = 0.0;           // max_j |∫ A N_j|
};

/// Cell problem for axis j: S(0) N = -b_j, fixed so that ∫ A N = 0.
/// `residual` receives the relative residual of the solve.
RVec solve_corrector(const DiscreteSpace& sp, const QpField& a, int j, double tol = 1e-10,
                     double* residual = nullptr);

/// All d correctors, solved in parallel over j. Requires a connected support.
CorrectorSet solve_correctors(const DiscreteSpace& sp, const QpField& a, double tol = 1e-10, int workers = 1);

/// (A_hom)_kj = ∫ A (∂_k N_j + δ_kj), where on a component only its free axes
/// carry a derivative or the identity term.
Eigen::MatrixXd homogenized_matrix(const DiscreteSpace& sp, const QpField& a, const CorrectorSet& n);

/// ∫ A |∇(N·θ) + Pθ|², P the projection on the free axes of each component.
double corrector_energy(const DiscreteSpace& sp, const QpField& a, const CorrectorSet& n, const RVec& theta);

}  // namespace homog
