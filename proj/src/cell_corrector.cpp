#include "homog/cell_corrector.hpp"

#include <cmath>
#include <sstream>

#include "homog/errors.hpp"
#include "homog/linalg.hpp"
#include "homog/parallel.hpp"
#include "homog/spectral.hpp"

namespace homog {

namespace {

void check_axis(const DiscreteSpace& sp, int j) {
  if (j < 0 || j >= sp.dim()) throw ConfigError("corrector axis " + std::to_string(j) + " out of range");
}

}  // namespace

RVec solve_corrector(const DiscreteSpace& sp, const QpField& a, int j, double tol, double* residual) {
  check_axis(sp, j);
  require_connected(sp);
  const auto vectors = assemble_weighted_vectors(sp, a);
  const auto n = static_cast<Eigen::Index>(sp.num_dofs());
  const CVec rhs = -vectors.b[j].cast<cplx>();
  if (rhs.cwiseAbs().maxCoeff() == 0.0) {
    if (residual) *residual = 0.0;
    return RVec::Zero(n);
  }
  const CSparse s0 = assemble_shifted_stiffness(sp, a, RVec::Zero(sp.dim()));
  const RSparse mass = assemble_mass(sp);
  // The rank-one term pins the mean to zero; b_j is orthogonal to constants,
  // so the regularized system has the same solution as the singular one.
  const RankOneShiftedSolver solver(s0, mass, vectors.m, 1.0);
  const CgResult sol = solver.solve(rhs, {tol, 0, 0.0});
  if (residual) *residual = sol.residual;

  RVec out = sol.x.real();
  out.array() -= vectors.w.dot(out) / vectors.w.sum();
  return out;
}

CorrectorSet solve_correctors(const DiscreteSpace& sp, const QpField& a, double tol, int workers) {
  require_connected(sp);
  const int d = sp.dim();
  CorrectorSet out;
  out.N.resize(d);
  out.gradN.resize(d);
  std::vector<double> residuals(d, 0.0);
  parallel_for(static_cast<std::size_t>(d), workers, [&](std::size_t j) {
    out.N[j] = solve_corrector(sp, a, static_cast<int>(j), tol, &residuals[j]);
    out.gradN[j] = sample_gradient(sp, out.N[j]);
  });
  const RVec w = assemble_weighted_vectors(sp, a).w;
  for (int j = 0; j < d; ++j) {
    out.residual = std::max(out.residual, residuals[j]);
    out.side_condition = std::max(out.side_condition, std::abs(w.dot(out.N[j])));
  }
  if (out.side_condition > 1e-10) {
    std::ostringstream os;
    os << "corrector side condition violated: |∫A N| = " << out.side_condition;
    throw NumericalError(os.str(), out.side_condition);
  }
  return out;
}

Eigen::MatrixXd homogenized_matrix(const DiscreteSpace& sp, const QpField& a, const CorrectorSet& n) {
  const int d = sp.dim();
  if (static_cast<int>(n.gradN.size()) != d) throw ConfigError("corrector set does not match the space");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t ei = 0; ei < sp.elements().size(); ++ei) {
    const Element& e = sp.elements()[ei];
    const int nq = sp.reference(static_cast<int>(e.free_axes.size())).num_points;
    for (int q = 0; q < nq; ++q) {
      const std::size_t qp = sp.qp_offset(ei) + q;
      const double wa = sp.qp_weight(e, q) * a.values[qp];
      for (int k : e.free_axes) {
        out(k, k) += wa;
        for (int j = 0; j < d; ++j) out(k, j) += wa * n.gradN[j][qp * d + k];
      }
    }
  }
  return out;
}

double corrector_energy(const DiscreteSpace& sp, const QpField& a, const CorrectorSet& n, const RVec& theta) {
  const int d = sp.dim();
  if (theta.size() != d) throw ConfigError("theta has the wrong dimension");
  double out = 0.0;
  for (std::size_t ei = 0; ei < sp.elements().size(); ++ei) {
    const Element& e = sp.elements()[ei];
    const int nq = sp.reference(static_cast<int>(e.free_axes.size())).num_points;
    for (int q = 0; q < nq; ++q) {
      const std::size_t qp = sp.qp_offset(ei) + q;
      double sq = 0.0;
      for (int k : e.free_axes) {
        double g = theta[k];
        for (int j = 0; j < d; ++j) g += theta[j] * n.gradN[j][qp * d + k];
        sq += g * g;
      }
      out += sp.qp_weight(e, q) * a.values[qp] * sq;
    }
  }
  return out;
}

}  // namespace homog
