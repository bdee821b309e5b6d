#pragma once

#include <complex>

#include <Eigen/Dense>

namespace mfgs {

using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;
using CMatX = Eigen::MatrixXcd;
using CVecX = Eigen::VectorXcd;
using Complex = std::complex<double>;

}  // namespace mfgs
