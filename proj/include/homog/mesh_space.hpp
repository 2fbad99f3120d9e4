#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "homog/expr.hpp"
#include "homog/measure.hpp"
#include "homog/types.hpp"

namespace homog {

/// Tensor-product Q1 reference cube [0,1]^k with the 3-point Gauss rule per
/// axis. k = 1 is the P1 segment. Corner c has local coordinate bit a set
/// when it sits at xi_a = 1.
struct ReferenceCube {
  int k = 0;
  int num_corners = 0;
  int num_points = 0;
  std::vector<double> xi;       // num_points x k
  std::vector<double> weight;   // num_points, sums to 1
  std::vector<double> phi;      // num_points x num_corners
  std::vector<double> dphi;     // num_points x num_corners x k, derivative in xi

  double value(int q, int c) const { return phi[q * num_corners + c]; }
  double deriv(int q, int c, int a) const { return dphi[(q * num_corners + c) * k + a]; }
};

/// One Q1 element living on a single measure component.
struct Element {
  int component = 0;
  std::vector<int> free_axes;  // global axis of each local axis
  std::vector<int> origin;     // lattice index of the lower corner, all d axes
  std::vector<int> dofs;       // one per reference corner
  double weight = 0.0;         // effective component weight
};

/// Conforming Q1/P1 discretization of H^1_# on the support of a measure.
///
/// Nodes live on the n-per-axis lattice of the torus; lattice points reached
/// by several components share a single DOF, which is the only coupling
/// between components.
class DiscreteSpace {
 public:
  int dim() const { return dim_; }
  int resolution() const { return n_; }
  double h() const { return 1.0 / n_; }
  std::size_t num_dofs() const { return dof_lattice_.size() / static_cast<std::size_t>(dim_); }
  const std::vector<Element>& elements() const { return elements_; }
  const ReferenceCube& reference(int k) const { return references_.at(k); }
  const PeriodicMeasure& measure() const { return measure_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Lattice coordinates y = index / n of a DOF.
  std::vector<double> node_coords(int dof) const;

  std::size_t num_qps() const { return num_qps_; }
  std::size_t qp_offset(std::size_t element) const { return qp_offsets_[element]; }
  /// Physical coordinates of quadrature point q of an element.
  void qp_coords(const Element& e, int q, std::span<double> out) const;
  /// Quadrature weight (measure weight times h^k times the reference weight).
  double qp_weight(const Element& e, int q) const;

 private:
  friend DiscreteSpace build_space(const PeriodicMeasure& m, int n);
  explicit DiscreteSpace(PeriodicMeasure m) : measure_(std::move(m)) {}

  PeriodicMeasure measure_;
  int dim_ = 0;
  int n_ = 0;
  std::vector<int> dof_lattice_;  // num_dofs x d lattice indices
  std::vector<Element> elements_;
  std::vector<ReferenceCube> references_;  // indexed by k
  std::vector<std::size_t> qp_offsets_;
  std::size_t num_qps_ = 0;
  std::vector<std::string> warnings_;
};

/// Builds the lattice mesh of every positively weighted component. Fixed
/// coordinates must lie on the lattice; values within 1e-9 of it are snapped
/// with a warning, anything else is a ConfigError.
DiscreteSpace build_space(const PeriodicMeasure& m, int n);

/// Coefficient sampled at every quadrature point of a space.
struct QpField {
  std::vector<double> values;
  double min = 0.0;
  double max = 0.0;
};

/// Evaluates A at all quadrature points; HypothesisError if A <= 0 anywhere.
QpField sample_coefficient(const DiscreteSpace& sp, const CoefficientField& a);
QpField constant_field(const DiscreteSpace& sp, double value);

/// Nodal interpolant of a (possibly complex) function.
CVec interpolate(const DiscreteSpace& sp, const PointFunction& f);
CVec interpolate(const DiscreteSpace& sp, const Expr& f);

/// Mass matrix M_ij = ∫ φ_i φ_j dμ.
RSparse assemble_mass(const DiscreteSpace& sp);

/// Shifted stiffness S(κ)_ij = ∫ A (∇+iκ)φ_j · conj((∇+iκ)φ_i) dμ, where on a
/// component only its free axes enter both ∇ and κ.
CSparse assemble_shifted_stiffness(const DiscreteSpace& sp, const QpField& a, const RVec& kappa);

/// S(κ)·1 assembled directly, (S(κ)1)_i = ∫ A iκ·conj((∇+iκ)φ_i), without
/// the cancellation of the matrix-vector product.
CVec assemble_constant_image(const DiscreteSpace& sp, const QpField& a, const RVec& kappa);

/// w_i = ∫ A φ_i, m_i = ∫ φ_i, (b_j)_i = ∫ A ∂_j φ_i.
struct WeightedVectors {
  RVec w;
  RVec m;
  std::vector<RVec> b;
};
WeightedVectors assemble_weighted_vectors(const DiscreteSpace& sp, const QpField& a);

/// Matrices of one Floquet fiber at quasimomentum κ.
struct FiberSystem {
  RSparse M;
  CSparse S;
  RVec w;
  RVec m;
  RVec kappa;
};
FiberSystem build_fiber_system(const DiscreteSpace& sp, const QpField& a, const RVec& kappa);

/// Gradient (free axes only, zero elsewhere) of a nodal field at every
/// quadrature point, stored num_qps x d.
std::vector<double> sample_gradient(const DiscreteSpace& sp, const RVec& coeffs);

}  // namespace homog
