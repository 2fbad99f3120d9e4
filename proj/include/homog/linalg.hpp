#pragma once

#include <cstdint>
#include <functional>
#include <memory>

#include "homog/types.hpp"

namespace homog {

using LinearMap = std::function<CVec(const CVec&)>;

inline constexpr std::uint64_t kDefaultSeed = 0x5EED;

struct CgOptions {
  double tol = 1e-10;
  int max_iter = 0;  // 0: 10 * n
  /// Residuals are measured relative to max(||b||, reference_norm). A
  /// right-hand side that is pure roundoff of a larger quantity passes this
  /// scale so that it is not asked for digits it does not have.
  double reference_norm = 0.0;
};

struct CgResult {
  CVec x;
  int iterations = 0;
  double residual = 0.0;  // ||b - A x|| / max(||b||, reference_norm), recomputed from x
};

/// Preconditioned conjugate gradients for a Hermitian positive definite map.
/// Throws NumericalError carrying the final residual if the cap is hit.
CgResult conjugate_gradient(const LinearMap& apply, const LinearMap& precond, const CVec& b,
                            const CgOptions& opts = {}, const CVec* x0 = nullptr);

/// Jacobi-preconditioned CG on a sparse HPD matrix.
CVec solve_hpd(const CSparse& a, const CVec& b, double tol = 1e-10, int max_iter = 0);

/// Normwise backward error ||b - A x|| / (||A||_inf ||x|| + ||b||), infinity norms.
double backward_error(const CSparse& a, const CVec& x, const CVec& b);

/// Sparse LDL^H factorization of an HPD matrix with one step of iterative
/// refinement per solve. Solves check the backward error against `tol`.
class HpdFactorization {
 public:
  explicit HpdFactorization(CSparse a, double tol = 1e-10);
  ~HpdFactorization();
  HpdFactorization(HpdFactorization&&) noexcept;
  HpdFactorization& operator=(HpdFactorization&&) noexcept;

  CVec solve(const CVec& b) const;
  /// Solve without the refinement step or residual check (preconditioner use).
  CVec apply_inverse(const CVec& b) const;
  const CSparse& matrix() const { return a_; }
  Eigen::Index size() const { return a_.rows(); }

 private:
  struct Impl;
  CSparse a_;
  double tol_;
  std::unique_ptr<Impl> impl_;
};

/// Solves (S + gamma m m^T) x = b with PCG, preconditioned by a factorization
/// of S + gamma M. Since m m^T <= M, the preconditioned spectrum lies in
/// (0, 1] and clusters near 1 away from the kernel of S.
class RankOneShiftedSolver {
 public:
  RankOneShiftedSolver(const CSparse& s, const RSparse& mass, const RVec& m, double gamma);

  CgResult solve(const CVec& b, const CgOptions& opts = {}) const;
  CVec apply(const CVec& x) const;

 private:
  CSparse s_;
  RVec m_;
  double gamma_;
  HpdFactorization precond_;
};

struct EigenOptions {
  double tol = 1e-8;  // relative eigen-residual
  int max_iter = 0;   // 0: max(10 n, 500)
  int block = 4;
  std::uint64_t seed = kDefaultSeed;
};

struct EigenResult {
  double lambda = 0.0;
  CVec v;  // M-normalized
  double residual = 0.0;
  int iterations = 0;
};

/// Smallest eigenpair of S v = lambda M v on {v : c^H M v = 0} (no constraint
/// when `constraint` is null), by shifted block inverse iteration with
/// Rayleigh-Ritz.
EigenResult smallest_eigen(const CSparse& s, const RSparse& mass, const CVec* constraint,
                           const EigenOptions& opts = {});

struct PowerOptions {
  double tol = 1e-12;  // relative change of the estimate between iterations
  int max_iter = 0;    // 0: max(10 n, 1000)
  int block = 4;       // 1 is plain power iteration
  std::uint64_t seed = kDefaultSeed;
};

struct PowerResult {
  double norm = 0.0;
  int iterations = 0;
};

/// Largest singular value of `apply` in the M-weighted norm, by block power
/// iteration on adjoint(apply(x)) with a Rayleigh-Ritz estimate, so nearly
/// equal top singular values do not stall it. `adjoint` must be the M-adjoint.
PowerResult operator_norm(const LinearMap& apply, const LinearMap& adjoint, const RSparse& mass,
                          const PowerOptions& opts = {});
/// Same, for a map that is self-adjoint in the M inner product.
PowerResult operator_norm(const LinearMap& apply, const RSparse& mass, const PowerOptions& opts = {});

/// Deterministic complex vector with entries uniform in [-1,1] + i[-1,1].
CVec random_vector(Eigen::Index n, std::uint64_t seed);

double m_norm(const RSparse& mass, const CVec& v);
cplx m_inner(const RSparse& mass, const CVec& u, const CVec& v);  // v^H M u

/// max |A_ij - conj(A_ji)|.
double max_hermitian_defect(const CSparse& a);

}  // namespace homog
