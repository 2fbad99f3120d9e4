#include "homog/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "homog/errors.hpp"

namespace homog {

namespace {

double real_dot(const CVec& u, const CVec& v) { return u.dot(v).real(); }

std::string format_residual(const char* what, double residual, int iterations) {
  std::ostringstream os;
  os << what << ": no convergence after " << iterations << " iterations, residual " << residual;
  return os.str();
}

}  // namespace

CgResult conjugate_gradient(const LinearMap& apply, const LinearMap& precond, const CVec& b,
                            const CgOptions& opts, const CVec* x0) {
  const Eigen::Index n = b.size();
  const int cap = opts.max_iter > 0 ? opts.max_iter : static_cast<int>(10 * n);
  CgResult out;
  out.x = x0 ? *x0 : CVec::Zero(n);
  const double bnorm = std::max(b.norm(), opts.reference_norm);
  if (b.norm() == 0.0) {
    out.x.setZero();
    return out;
  }

  // A converged recursion can drift from the true residual; restart from the
  // current iterate a couple of times before giving up.
  for (int restart = 0; restart < 3; ++restart) {
    CVec r = b - apply(out.x);
    out.residual = r.norm() / bnorm;
    if (out.residual <= opts.tol) return out;
    CVec z = precond(r);
    CVec p = z;
    double rz = real_dot(r, z);
    while (out.iterations < cap) {
      const CVec ap = apply(p);
      const double pap = real_dot(p, ap);
      if (!(pap > 0.0)) throw NumericalError("conjugate gradients: operator is not positive definite", out.residual);
      const double alpha = rz / pap;
      out.x += alpha * p;
      r -= alpha * ap;
      ++out.iterations;
      if (r.norm() <= opts.tol * bnorm) break;
      z = precond(r);
      const double rz_next = real_dot(r, z);
      p = z + (rz_next / rz) * p;
      rz = rz_next;
    }
    out.residual = (b - apply(out.x)).norm() / bnorm;
    if (out.residual <= opts.tol) return out;
    if (out.iterations >= cap) break;
  }
  throw NumericalError(format_residual("conjugate gradients", out.residual, out.iterations), out.residual);
}

CVec solve_hpd(const CSparse& a, const CVec& b, double tol, int max_iter) {
  const RVec diag = a.diagonal().real();
  if ((diag.array() <= 0.0).any()) throw NumericalError("solve_hpd: nonpositive diagonal entry");
  const RVec inv_diag = diag.cwiseInverse();
  const auto result = conjugate_gradient([&](const CVec& x) -> CVec { return a * x; },
                                         [&](const CVec& r) -> CVec { return inv_diag.cwiseProduct(r); },
                                         b, {tol, max_iter, 0.0});
  return result.x;
}

double backward_error(const CSparse& a, const CVec& x, const CVec& b) {
  double norm_a = 0.0;
  RVec row_sums = RVec::Zero(a.rows());
  for (int k = 0; k < a.outerSize(); ++k) {
    for (CSparse::InnerIterator it(a, k); it; ++it) row_sums[it.row()] += std::abs(it.value());
  }
  if (row_sums.size() > 0) norm_a = row_sums.maxCoeff();
  const double denom = norm_a * x.cwiseAbs().maxCoeff() + b.cwiseAbs().maxCoeff();
  if (denom == 0.0) return 0.0;
  return (b - a * x).cwiseAbs().maxCoeff() / denom;
}

struct HpdFactorization::Impl {
  Eigen::SimplicialLDLT<CSparse, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
};

HpdFactorization::HpdFactorization(CSparse a, double tol)
    : a_(std::move(a)), tol_(tol), impl_(std::make_unique<Impl>()) {
  a_.makeCompressed();
  impl_->ldlt.compute(a_);
  if (impl_->ldlt.info() != Eigen::Success)
    throw NumericalError("LDL^H factorization failed: matrix is singular or not positive definite");
  const auto d = impl_->ldlt.vectorD();
  if ((d.real().array() <= 0.0).any())
    throw NumericalError("LDL^H factorization: matrix is not positive definite");
}

HpdFactorization::~HpdFactorization() = default;
HpdFactorization::HpdFactorization(HpdFactorization&&) noexcept = default;
HpdFactorization& HpdFactorization::operator=(HpdFactorization&&) noexcept = default;

CVec HpdFactorization::apply_inverse(const CVec& b) const { return impl_->ldlt.solve(b); }

CVec HpdFactorization::solve(const CVec& b) const {
  CVec x = impl_->ldlt.solve(b);
  const CVec r = b - a_ * x;
  x += impl_->ldlt.solve(r);
  const double eta = backward_error(a_, x, b);
  if (!(eta <= tol_)) {
    std::ostringstream os;
    os << "direct solve: backward error " << eta << " exceeds " << tol_;
    throw NumericalError(os.str(), eta);
  }
  return x;
}

RankOneShiftedSolver::RankOneShiftedSolver(const CSparse& s, const RSparse& mass, const RVec& m, double gamma)
    : s_(s), m_(m), gamma_(gamma), precond_(CSparse(s + gamma * mass.cast<cplx>())) {}

CVec RankOneShiftedSolver::apply(const CVec& x) const {
  const cplx mean = m_.cast<cplx>().dot(x);  // m^T x, m real
  return s_ * x + (gamma_ * mean) * m_.cast<cplx>();
}

CgResult RankOneShiftedSolver::solve(const CVec& b, const CgOptions& opts) const {
  CgOptions capped = opts;
  if (capped.max_iter <= 0) capped.max_iter = std::max<int>(200, static_cast<int>(std::min<Eigen::Index>(10 * b.size(), 2000)));
  return conjugate_gradient([this](const CVec& x) { return apply(x); },
                            [this](const CVec& r) { return precond_.apply_inverse(r); }, b, capped);
}

CVec random_vector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  auto uniform = [&] { return 2.0 * static_cast<double>(gen() >> 11) * 0x1.0p-53 - 1.0; };
  CVec v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double re = uniform();
    const double im = uniform();
    v[i] = cplx(re, im);
  }
  return v;
}

cplx m_inner(const RSparse& mass, const CVec& u, const CVec& v) { return v.dot(mass * u); }

double m_norm(const RSparse& mass, const CVec& v) {
  return std::sqrt(std::max(0.0, m_inner(mass, v, v).real()));
}

double max_hermitian_defect(const CSparse& a) {
  const CSparse diff = a - CSparse(a.adjoint());
  double out = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k) {
    for (CSparse::InnerIterator it(diff, k); it; ++it) out = std::max(out, std::abs(it.value()));
  }
  return out;
}

EigenResult smallest_eigen(const CSparse& s, const RSparse& mass, const CVec* constraint, const EigenOptions& opts) {
  const Eigen::Index n = s.rows();
  const Eigen::Index dim = constraint ? n - 1 : n;
  if (dim <= 0) throw NumericalError("smallest_eigen: constraint space is zero-dimensional");
  const int block = static_cast<int>(std::min<Eigen::Index>(std::max(1, opts.block), dim));
  const int cap = opts.max_iter > 0 ? opts.max_iter : static_cast<int>(std::max<Eigen::Index>(10 * n, 500));
  const CSparse mc = mass.cast<cplx>();

  const double trace_s = s.diagonal().real().sum();
  const double trace_m = mass.diagonal().sum();
  double shift = trace_m > 0.0 ? 1e-4 * trace_s / trace_m : 0.0;
  if (!(shift > 0.0)) shift = 1.0;
  const HpdFactorization k(CSparse(s + shift * mc));

  CVec mcon;
  CVec kinv_mcon;
  double con_denom = 1.0;
  if (constraint) {
    mcon = mc * *constraint;
    if (mcon.norm() == 0.0) throw NumericalError("smallest_eigen: constraint vector has zero M-norm");
    kinv_mcon = k.apply_inverse(mcon);
    con_denom = mcon.dot(kinv_mcon).real();
  }
  auto project_start = [&](CVec& v) {
    if (constraint) v -= *constraint * (mcon.dot(v) / mcon.dot(*constraint));
  };
  // Constrained inverse: x = K^{-1}(M v - mu M c) with c^H M x = 0.
  auto inverse = [&](const CVec& v) {
    CVec x = k.apply_inverse(mc * v);
    if (constraint) x -= kinv_mcon * (mcon.dot(x) / con_denom);
    return x;
  };

  Eigen::MatrixXcd x(n, block);
  for (int j = 0; j < block; ++j) {
    CVec v = random_vector(n, opts.seed + static_cast<std::uint64_t>(j));
    project_start(v);
    x.col(j) = v;
  }

  EigenResult out;
  for (int it = 0; it < cap; ++it) {
    Eigen::MatrixXcd y(n, block);
    for (int j = 0; j < block; ++j) y.col(j) = inverse(x.col(j));
    const Eigen::MatrixXcd my = mc * y;
    const Eigen::MatrixXcd sy = s * y;
    Eigen::MatrixXcd g = y.adjoint() * my;
    Eigen::MatrixXcd h = y.adjoint() * sy;
    g = 0.5 * (g + g.adjoint()).eval();
    h = 0.5 * (h + h.adjoint()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> rr(h, g);
    if (rr.info() != Eigen::Success) throw NumericalError("smallest_eigen: Rayleigh-Ritz step failed");
    x = y * rr.eigenvectors();

    out.lambda = rr.eigenvalues()[0];
    out.v = x.col(0);
    out.iterations = it + 1;
    const CVec sv = s * out.v;
    const CVec mv = mc * out.v;
    CVec r = sv - out.lambda * mv;
    if (constraint) r -= mcon * (mcon.dot(r) / mcon.squaredNorm());
    const double scale = sv.norm() + std::abs(out.lambda) * mv.norm();
    out.residual = scale > 0.0 ? r.norm() / scale : r.norm();
    if (out.residual <= opts.tol) {
      out.v /= m_norm(mass, out.v);
      return out;
    }
  }
  throw NumericalError(format_residual("smallest_eigen", out.residual, out.iterations), out.residual);
}

PowerResult operator_norm(const LinearMap& apply, const LinearMap& adjoint, const RSparse& mass,
                          const PowerOptions& opts) {
  const Eigen::Index n = mass.rows();
  const int cap = opts.max_iter > 0 ? opts.max_iter : static_cast<int>(std::max<Eigen::Index>(10 * n, 1000));
  const CSparse mc = mass.cast<cplx>();

  // M-orthonormal basis of span(w), dropping numerically dependent directions.
  auto orthonormalize = [&](const Eigen::MatrixXcd& w) -> Eigen::MatrixXcd {
    Eigen::MatrixXcd g = w.adjoint() * (mc * w);
    g = 0.5 * (g + g.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(g);
    const Eigen::VectorXd lam = eig.eigenvalues();
    const double top = lam.size() ? lam.maxCoeff() : 0.0;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = lam.size() - 1; j >= 0; --j) {
      if (top > 0.0 && lam[j] > 1e-14 * top) keep.push_back(j);
    }
    Eigen::MatrixXcd out(n, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c)
      out.col(static_cast<Eigen::Index>(c)) = w * eig.eigenvectors().col(keep[c]) / std::sqrt(lam[keep[c]]);
    return out;
  };

  const Eigen::Index block = std::min<Eigen::Index>(std::max(1, opts.block), n);
  Eigen::MatrixXcd w(n, block);
  for (Eigen::Index j = 0; j < block; ++j) w.col(j) = random_vector(n, opts.seed + static_cast<std::uint64_t>(j));
  Eigen::MatrixXcd x = orthonormalize(w);

  PowerResult out;
  double previous = -1.0;
  double last_change = 1.0;
  for (int it = 0; it < cap && x.cols() > 0; ++it) {
    Eigen::MatrixXcd y(n, x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) y.col(j) = apply(x.col(j));
    Eigen::MatrixXcd g = y.adjoint() * (mc * y);
    g = 0.5 * (g + g.adjoint()).eval();
    const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(g, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    out.norm = std::sqrt(std::max(0.0, top));
    out.iterations = it + 1;
    if (out.norm == 0.0) return out;
    const double change = previous >= 0.0 ? std::abs(out.norm - previous) / out.norm : 1.0;
    if (change <= opts.tol) return out;
    previous = out.norm;
    last_change = change;
    Eigen::MatrixXcd z(n, y.cols());
    for (Eigen::Index j = 0; j < y.cols(); ++j) z.col(j) = adjoint(y.col(j));
    x = orthonormalize(z);
  }
  if (x.cols() == 0) {
    out.norm = 0.0;
    return out;
  }
  throw NumericalError(format_residual("operator_norm", last_change, out.iterations), last_change);
}

PowerResult operator_norm(const LinearMap& apply, const RSparse& mass, const PowerOptions& opts) {
  return operator_norm(apply, apply, mass, opts);
}

}  // namespace homog
