#pragma once

#include <random>

#include "mfgs/analysis.hpp"
#include "mfgs/lti.hpp"

namespace mfgs::testing {

inline MatX random_matrix(std::mt19937_64& rng, long rows, long cols, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  MatX m(rows, cols);
  for (long j = 0; j < cols; ++j)
    for (long i = 0; i < rows; ++i) m(i, j) = nd(rng);
  return m;
}

inline double max_real_eig(const MatX& A) {
  Eigen::EigenSolver<MatX> es(A, false);
  double a = -std::numeric_limits<double>::infinity();
  for (long i = 0; i < es.eigenvalues().size(); ++i)
    a = std::max(a, es.eigenvalues()[i].real());
  return a;
}

// Random internally stable closed loop with identity (or SPD descriptor) Ec.
inline lti::ClosedLoop random_stable_loop(std::mt19937_64& rng, long n, long m, long p,
                                          bool descriptor = false, double margin = 0.5) {
  lti::ClosedLoop cl;
  MatX A = random_matrix(rng, n, n);
  A -= (max_real_eig(A) + margin) * MatX::Identity(n, n);
  if (descriptor) {
    MatX Q = random_matrix(rng, n, n, 0.4);
    // well-conditioned symmetric positive definite descriptor matrix
    MatX E = MatX::Identity(n, n) + 0.1 * (Q + Q.transpose());
    cl.Ec = E;
    cl.Ac = E * A;  // pencil (E*A, E) has the eigenvalues of A
  } else {
    cl.Ec = MatX::Identity(n, n);
    cl.Ac = A;
  }
  cl.Bc = random_matrix(rng, n, m);
  cl.Cc = random_matrix(rng, p, n);
  cl.Dc = random_matrix(rng, p, m, 0.2);
  return cl;
}

// Damped oscillator 1/(s^2 + 2 zeta s + 1) in companion form.
inline lti::ClosedLoop oscillator_loop(double zeta) {
  lti::ClosedLoop cl;
  cl.Ec = MatX::Identity(2, 2);
  cl.Ac = (MatX(2, 2) << 0.0, 1.0, -1.0, -2.0 * zeta).finished();
  cl.Bc = (MatX(2, 1) << 0.0, 1.0).finished();
  cl.Cc = (MatX(1, 2) << 1.0, 0.0).finished();
  cl.Dc = MatX::Zero(1, 1);
  return cl;
}

// Scalar plant: n = 1, all external channels scalar, direct terms zero.
inline lti::DescriptorPlant scalar_plant() {
  MatX one = MatX::Constant(1, 1, 1.0);
  MatX zero = MatX::Zero(1, 1);
  return lti::DescriptorPlant::make(one, -one, one, one, one, one, zero, zero, zero, zero);
}

}  // namespace mfgs::testing
