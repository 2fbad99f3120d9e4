#include "homog/fiber.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "homog/errors.hpp"
#include "homog/spectral.hpp"

namespace homog {

namespace {

constexpr cplx kI{0.0, 1.0};

RVec checked_kappa(double eps, const RVec& theta, int dim) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("eps must be positive and finite");
  if (theta.size() != dim)
    throw ConfigError("theta has " + std::to_string(theta.size()) + " components, expected " + std::to_string(dim));
  RVec kappa = eps * theta;
  for (Eigen::Index a = 0; a < kappa.size(); ++a) {
    if (!(kappa[a] >= -std::numbers::pi && kappa[a] < std::numbers::pi)) {
      std::ostringstream os;
      os << "eps*theta = " << kappa[a] << " on axis " << a << " is outside [-pi, pi)";
      throw ConfigError(os.str());
    }
  }
  return kappa;
}

CSparse build_fiber_matrix(const CSparse& s, const RSparse& mass, double eps) {
  return CSparse(s / (eps * eps) + mass.cast<cplx>());
}

}  // namespace

HomogenizationModel::HomogenizationModel(std::shared_ptr<const DiscreteSpace> sp, const CoefficientField& a,
                                         const ModelOptions& opts)
    : space_(std::move(sp)) {
  require_connected(*space_);
  a_ = sample_coefficient(*space_, a);
  mass_ = assemble_mass(*space_);
  vectors_ = assemble_weighted_vectors(*space_, a_);
  correctors_ = solve_correctors(*space_, a_, opts.tol, opts.workers);
  a_hom_ = homogenized_matrix(*space_, a_, correctors_);
}

CSparse HomogenizationModel::stiffness(const RVec& kappa) const {
  return assemble_shifted_stiffness(*space_, a_, kappa);
}

RVec HomogenizationModel::oscillator(const RVec& theta) const {
  RVec out = RVec::Zero(static_cast<Eigen::Index>(space_->num_dofs()));
  for (int j = 0; j < space_->dim(); ++j) out += theta[j] * correctors_.N[j];
  return out;
}

cplx homog_coefficient(const CVec& f, const Eigen::MatrixXd& a_hom, const RVec& theta, const RVec& m) {
  const double q = theta.dot(a_hom * theta);
  return m.cast<cplx>().dot(f) / (q + 1.0);
}

FiberOperator::FiberOperator(const HomogenizationModel& model, double eps, RVec theta, const FiberOptions& opts)
    : model_(model),
      eps_(eps),
      theta_(std::move(theta)),
      kappa_(checked_kappa(eps, theta_, model.space().dim())),
      opts_(opts),
      s_(model.stiffness(kappa_)),
      k_(build_fiber_matrix(s_, model.mass(), eps), opts.solve_tol),
      n_theta_(model.oscillator(theta_)),
      k_one_(assemble_constant_image(model.space(), model.coefficient(), kappa_) / (eps * eps) +
             model.m().cast<cplx>()) {}

FiberOperator::~FiberOperator() = default;

FiberSolution FiberOperator::fiber_solve(const CVec& f) const {
  return {eps_, theta_, k_.solve(model_.mass() * f), f};
}

cplx FiberOperator::homog_coefficient(const CVec& f) const {
  return homog::homog_coefficient(f, model_.a_hom(), theta_, model_.m());
}

CVec FiberOperator::remainder_rhs(const CVec& f, cplx c) const {
  const DiscreteSpace& sp = model_.space();
  const QpField& a = model_.coefficient();
  const auto& grads = model_.correctors().gradN;
  const int d = sp.dim();
  const double inv_h = 1.0 / sp.h();
  CVec out = model_.mass() * f;
  if (c == 0.0) return out;
  std::vector<cplx> local;
  for (std::size_t ei = 0; ei < sp.elements().size(); ++ei) {
    const Element& e = sp.elements()[ei];
    const ReferenceCube& ref = sp.reference(static_cast<int>(e.free_axes.size()));
    double theta_sq = 0.0;
    for (int k : e.free_axes) theta_sq += theta_[k] * theta_[k];
    local.assign(ref.num_corners, 0.0);
    for (int q = 0; q < ref.num_points; ++q) {
      const std::size_t qp = sp.qp_offset(ei) + q;
      const double wq = sp.qp_weight(e, q);
      const double aq = a.values[qp];
      double n = 0.0;
      for (int c2 = 0; c2 < ref.num_corners; ++c2) n += n_theta_[e.dofs[c2]] * ref.value(q, c2);
      double theta_grad_n = 0.0;
      for (int k : e.free_axes) {
        for (int j = 0; j < d; ++j) theta_grad_n += theta_[k] * theta_[j] * grads[j][qp * d + k];
      }
      for (int corner = 0; corner < ref.num_corners; ++corner) {
        const double phi = ref.value(q, corner);
        double theta_grad_phi = 0.0;
        for (int l = 0; l < ref.k; ++l) theta_grad_phi += theta_[e.free_axes[l]] * ref.deriv(q, corner, l) * inv_h;
        const cplx term = aq * theta_sq * phi - aq * n * theta_grad_phi + aq * theta_grad_n * phi +
                          kI * eps_ * aq * n * theta_sq * phi + phi;
        local[corner] += wq * term;
      }
    }
    for (int corner = 0; corner < ref.num_corners; ++corner) out[e.dofs[corner]] -= c * local[corner];
  }
  return out;
}

CVec FiberOperator::remainder_rhs_from_operator(const CVec& f, cplx c) const {
  const auto n = static_cast<Eigen::Index>(model_.space().num_dofs());
  const CVec v = c * (CVec::Ones(n) + kI * eps_ * n_theta_.cast<cplx>());
  return model_.mass() * f - (s_ * v) / (eps_ * eps_) - c * model_.m().cast<cplx>();
}

cplx FiberOperator::expected_rhs_mean(cplx c) const {
  const DiscreteSpace& sp = model_.space();
  const QpField& a = model_.coefficient();
  cplx integral = 0.0;
  for (std::size_t ei = 0; ei < sp.elements().size(); ++ei) {
    const Element& e = sp.elements()[ei];
    const ReferenceCube& ref = sp.reference(static_cast<int>(e.free_axes.size()));
    double theta_sq = 0.0;
    for (int k : e.free_axes) theta_sq += theta_[k] * theta_[k];
    if (theta_sq == 0.0) continue;
    for (int q = 0; q < ref.num_points; ++q) {
      double n = 0.0;
      for (int c2 = 0; c2 < ref.num_corners; ++c2) n += n_theta_[e.dofs[c2]] * ref.value(q, c2);
      integral += sp.qp_weight(e, q) * a.values[sp.qp_offset(ei) + q] * n * theta_sq;
    }
  }
  return -kI * eps_ * c * integral;
}

RemainderSolution FiberOperator::solve_remainder(const CVec& f) const {
  RemainderSolution out;
  out.eps = eps_;
  out.theta = theta_;
  out.c = homog_coefficient(f);
  const CVec h = remainder_rhs(f, out.c);
  const double f_norm = m_norm(model_.mass(), f);
  const auto n = static_cast<Eigen::Index>(model_.space().num_dofs());
  if (f_norm == 0.0) {
    out.R = CVec::Zero(n);
    return out;
  }
  out.compatibility = std::abs(h.sum() - expected_rhs_mean(out.c)) / f_norm;
  if (out.compatibility > 1e-6) {
    std::ostringstream os;
    os << "remainder right-hand side fails the compatibility check: defect " << out.compatibility;
    throw NumericalError(os.str(), out.compatibility);
  }
  if (!remainder_solver_)
    remainder_solver_ = std::make_unique<RankOneShiftedSolver>(s_, model_.mass(), model_.m(), eps_ * eps_);
  // H is M F minus nearly equal terms; its residual is judged against M F.
  const CgResult sol = remainder_solver_->solve(h, {opts_.remainder_tol, 0, (model_.mass() * f).norm()});
  out.R = sol.x;
  out.residual = sol.residual;
  if (kappa_.isZero(0.0)) {
    // At κ = 0 constants are in the kernel of S, so the φ = 1 row decouples:
    // ε² ∫R = <H,1>. Impose it exactly instead of to solver accuracy.
    out.R.array() += h.sum() / (eps_ * eps_) - model_.m().cast<cplx>().dot(out.R);
  }
  out.mean = model_.m().cast<cplx>().dot(out.R);
  return out;
}

CVec FiberOperator::first_order_approx(cplx c, const CVec& r) const {
  const auto n = static_cast<Eigen::Index>(model_.space().num_dofs());
  return c * (CVec::Ones(n) + kI * eps_ * n_theta_.cast<cplx>()) + (eps_ * eps_) * r;
}

CVec FiberOperator::defect(const CVec& f, const RemainderSolution& rem) const {
  // K U = c K 1 + iε⁻¹c S N·θ + S R + M (iεc N·θ + ε² R)
  const CVec osc = kI * rem.c * n_theta_.cast<cplx>();
  const CVec r = model_.mass() * f - rem.c * k_one_ - (s_ * osc) / eps_ - s_ * rem.R -
                 model_.mass() * (eps_ * osc + (eps_ * eps_) * rem.R);
  return k_.solve(r);
}

CVec FiberOperator::error_map(const CVec& f) const {
  return k_.solve(model_.mass() * f - homog_coefficient(f) * k_one_);
}

double FiberOperator::error_operator_norm() const {
  return operator_norm([this](const CVec& f) { return error_map(f); }, model_.mass(), opts_.power).norm;
}

}  // namespace homog
