#pragma once

#include <vector>

#include "mfgs/types.hpp"

namespace mfgs::pencil {

// Generalized eigenvalues of (A, E) as (alpha, beta) pairs; the eigenvalue is
// alpha/beta, infinite when |beta| falls below the finiteness threshold.
struct GeneralizedEigenvalues {
  VecX alpha_re, alpha_im, beta;

  long size() const { return beta.size(); }
  Complex eigenvalue(long i) const { return Complex(alpha_re[i], alpha_im[i]) / beta[i]; }
};

// One-shot QZ, eigenvalues only.
GeneralizedEigenvalues generalized_eigenvalues(MatX A, MatX E);

// Threshold below which a (alpha, beta) pair counts as an infinite eigenvalue.
double finite_beta_threshold(const MatX& A, const MatX& E);

// Hessenberg-triangular form of the pencil (A, E):
//   A = U * H * V^T,  E = U * T * V^T
// with U, V orthogonal, H upper Hessenberg, T upper triangular. Shifted
// systems (s*E - A) x = b then cost O(n^2) per solve, and the generalized
// eigenvalues come from the reduced pair.
class ReducedPencil {
 public:
  ReducedPencil(const MatX& A, const MatX& E);

  long size() const { return n_; }
  const GeneralizedEigenvalues& eigenvalues() const { return eig_; }
  double beta_threshold() const { return beta_threshold_; }

  // (s*E - A)^{-1} * rhs. Throws if the shifted pencil is singular at s.
  CMatX solve(Complex s, const CMatX& rhs) const;
  // (s*E - A)^{-H} * rhs.
  CMatX solve_conj_transpose(Complex s, const CMatX& rhs) const;

 private:
  long n_;
  MatX H_, T_, U_, V_;
  GeneralizedEigenvalues eig_;
  double beta_threshold_;
};

// Dense complex LU (partial pivoting) with plain and conjugate-transpose
// solves off one factorization.
class ComplexLu {
 public:
  explicit ComplexLu(CMatX M);  // throws on exactly singular input

  CMatX solve(const CMatX& rhs) const;                 // M x = rhs
  CMatX solve_conj_transpose(const CMatX& rhs) const;  // M^H x = rhs

 private:
  CMatX lu_;
  std::vector<int> ipiv_;
};

}  // namespace mfgs::pencil
