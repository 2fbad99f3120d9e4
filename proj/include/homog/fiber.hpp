#pragma once

#include <memory>
#include <optional>

#include <Eigen/Core>

#include "homog/cell_corrector.hpp"
#include "homog/expr.hpp"
#include "homog/linalg.hpp"
#include "homog/mesh_space.hpp"

namespace homog {

struct ModelOptions {
  double tol = 1e-10;
  int workers = 1;
};

/// Everything that depends on the measure, the coefficient and the mesh but
/// not on (ε, θ): mass matrix, weighted vectors, correctors and A_hom.
/// Immutable, shared read-only by all fiber tasks.
class HomogenizationModel {
 public:
  HomogenizationModel(std::shared_ptr<const DiscreteSpace> sp, const CoefficientField& a,
                      const ModelOptions& opts = {});

  const DiscreteSpace& space() const { return *space_; }
  std::shared_ptr<const DiscreteSpace> space_ptr() const { return space_; }
  const QpField& coefficient() const { return a_; }
  const RSparse& mass() const { return mass_; }
  const RVec& m() const { return vectors_.m; }
  const RVec& w() const { return vectors_.w; }
  const CorrectorSet& correctors() const { return correctors_; }
  const Eigen::MatrixXd& a_hom() const { return a_hom_; }

  CSparse stiffness(const RVec& kappa) const;
  /// N·θ as nodal values.
  RVec oscillator(const RVec& theta) const;

 private:
  std::shared_ptr<const DiscreteSpace> space_;
  QpField a_;
  RSparse mass_;
  WeightedVectors vectors_;
  CorrectorSet correctors_;
  Eigen::MatrixXd a_hom_;
};

/// c_θ = (θ·A_hom θ + 1)^{-1} ∫F, with ∫F = m^T F.
cplx homog_coefficient(const CVec& f, const Eigen::MatrixXd& a_hom, const RVec& theta, const RVec& m);

struct FiberOptions {
  double solve_tol = 1e-10;      // backward error of the direct fiber solves
  double remainder_tol = 1e-9;   // relative residual of the remainder system
  PowerOptions power;
};

struct FiberSolution {
  double eps = 0.0;
  RVec theta;
  CVec u;
  CVec F;
};

struct RemainderSolution {
  double eps = 0.0;
  RVec theta;
  cplx c = 0.0;
  CVec R;
  cplx mean = 0.0;          // ∫R
  double residual = 0.0;    // residual of (S + ε² m m^T) R = H relative to ‖M F‖
  double compatibility = 0.0;  // |<H,1> - expected| / ||F||_M
};

/// One Floquet fiber at quasimomentum κ = εθ. Holds the factorization of
/// ε⁻²S(κ) + M; the remainder solver is built on first use, so an instance
/// must not be shared between threads.
class FiberOperator {
 public:
  FiberOperator(const HomogenizationModel& model, double eps, RVec theta, const FiberOptions& opts = {});
  ~FiberOperator();

  double eps() const { return eps_; }
  const RVec& theta() const { return theta_; }
  const RVec& kappa() const { return kappa_; }
  const CSparse& stiffness() const { return s_; }

  /// (ε⁻²S(κ) + M) u = M F.
  FiberSolution fiber_solve(const CVec& f) const;
  cplx homog_coefficient(const CVec& f) const;

  /// Right-hand side of the remainder system, assembled term by term at the
  /// quadrature points.
  CVec remainder_rhs(const CVec& f, cplx c) const;
  /// Same vector from M F - ε⁻²S(κ)(c + iεc N·θ) - c m.
  CVec remainder_rhs_from_operator(const CVec& f, cplx c) const;
  /// Value <H,1> must take: -iεc ∫ A (N·θ)|Pθ|², which vanishes whenever
  /// |Pθ| is the same on every component.
  cplx expected_rhs_mean(cplx c) const;

  RemainderSolution solve_remainder(const CVec& f) const;
  /// U = c + iεc N·θ + ε²R.
  CVec first_order_approx(cplx c, const CVec& r) const;

  /// u - U for the datum F and its remainder, as K⁻¹(M F - K U) with K·U
  /// expanded term by term; forming u and U separately loses the difference
  /// to the roundoff of the ε⁻²-scaled solve once ε is small.
  CVec defect(const CVec& f, const RemainderSolution& rem) const;
  /// F ↦ u - c_θ(F)·1, computed as K⁻¹(M F - c K·1) so that the two nearly
  /// equal terms never get subtracted after the solve.
  CVec error_map(const CVec& f) const;
  /// M-operator norm of `error_map`.
  double error_operator_norm() const;

 private:
  const HomogenizationModel& model_;
  double eps_;
  RVec theta_;
  RVec kappa_;
  FiberOptions opts_;
  CSparse s_;
  HpdFactorization k_;
  RVec n_theta_;
  CVec k_one_;  // (ε⁻²S(κ) + M)·1
  mutable std::unique_ptr<RankOneShiftedSolver> remainder_solver_;
};

}  // namespace homog
