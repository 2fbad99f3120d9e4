#pragma once

#include <complex>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace homog {

using cplx = std::complex<double>;
using RVec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using RSparse = Eigen::SparseMatrix<double>;
using CSparse = Eigen::SparseMatrix<cplx>;

}  // namespace homog
