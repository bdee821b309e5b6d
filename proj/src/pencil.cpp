#include "mfgs/pencil.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

extern "C" {
void dggev_(const char* jobvl, const char* jobvr, const int* n, double* a, const int* lda,
            double* b, const int* ldb, double* alphar, double* alphai, double* beta, double* vl,
            const int* ldvl, double* vr, const int* ldvr, double* work, const int* lwork,
            int* info);
void dgeqrf_(const int* m, const int* n, double* a, const int* lda, double* tau, double* work,
             const int* lwork, int* info);
void dormqr_(const char* side, const char* trans, const int* m, const int* n, const int* k,
             const double* a, const int* lda, const double* tau, double* c, const int* ldc,
             double* work, const int* lwork, int* info);
void dorgqr_(const int* m, const int* n, const int* k, double* a, const int* lda,
             const double* tau, double* work, const int* lwork, int* info);
void dgghd3_(const char* compq, const char* compz, const int* n, const int* ilo, const int* ihi,
             double* a, const int* lda, double* b, const int* ldb, double* q, const int* ldq,
             double* z, const int* ldz, double* work, const int* lwork, int* info);
void dhgeqz_(const char* job, const char* compq, const char* compz, const int* n, const int* ilo,
             const int* ihi, double* h, const int* ldh, double* t, const int* ldt, double* alphar,
             double* alphai, double* beta, double* q, const int* ldq, double* z, const int* ldz,
             double* work, const int* lwork, int* info);
void zgetrf_(const int* m, const int* n, std::complex<double>* a, const int* lda, int* ipiv,
             int* info);
void zgetrs_(const char* trans, const int* n, const int* nrhs, const std::complex<double>* a,
             const int* lda, const int* ipiv, std::complex<double>* b, const int* ldb, int* info);
}

namespace mfgs::pencil {

namespace {

[[noreturn]] void lapack_fail(const char* routine, int info) {
  std::ostringstream os;
  os << routine << " failed with info = " << info;
  throw std::runtime_error(os.str());
}

// LU with partial pivoting of a complex upper Hessenberg matrix, eliminating
// the single subdiagonal while transforming the right-hand sides in place,
// then back-substitution. O(n^2 * nrhs). Throws on a negligible pivot.
void hessenberg_solve_inplace(CMatX& M, CMatX& B, double singular_tol) {
  const long n = M.rows();
  for (long k = 0; k + 1 < n; ++k) {
    if (std::abs(M(k + 1, k)) > std::abs(M(k, k))) {
      M.row(k).tail(n - k).swap(M.row(k + 1).tail(n - k));
      B.row(k).swap(B.row(k + 1));
    }
    const Complex piv = M(k, k);
    if (std::abs(piv) <= singular_tol) throw std::runtime_error("hessenberg solve: singular pivot");
    const Complex m = M(k + 1, k) / piv;
    if (m != Complex(0.0, 0.0)) {
      M.row(k + 1).tail(n - k - 1) -= m * M.row(k).tail(n - k - 1);
      B.row(k + 1) -= m * B.row(k);
    }
    M(k + 1, k) = 0.0;
  }
  if (std::abs(M(n - 1, n - 1)) <= singular_tol)
    throw std::runtime_error("hessenberg solve: singular pivot");
  for (long k = n - 1; k >= 0; --k) {
    B.row(k) -= M.row(k).segment(k + 1, n - k - 1) * B.middleRows(k + 1, n - k - 1);
    B.row(k) /= M(k, k);
  }
}

}  // namespace

double finite_beta_threshold(const MatX& A, const MatX& E) {
  const double eps = std::numeric_limits<double>::epsilon();
  return static_cast<double>(A.rows()) * eps * (A.norm() + E.norm());
}

GeneralizedEigenvalues generalized_eigenvalues(MatX A, MatX E) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n || E.rows() != n || E.cols() != n)
    throw std::invalid_argument("generalized_eigenvalues: matrices must be square and equal size");
  GeneralizedEigenvalues out;
  out.alpha_re.resize(n);
  out.alpha_im.resize(n);
  out.beta.resize(n);
  if (n == 0) return out;

  int info = 0, lwork = -1;
  double wq = 0.0;
  dggev_("N", "N", &n, A.data(), &n, E.data(), &n, out.alpha_re.data(), out.alpha_im.data(),
         out.beta.data(), nullptr, &n, nullptr, &n, &wq, &lwork, &info);
  lwork = static_cast<int>(wq);
  std::vector<double> work(static_cast<size_t>(lwork));
  dggev_("N", "N", &n, A.data(), &n, E.data(), &n, out.alpha_re.data(), out.alpha_im.data(),
         out.beta.data(), nullptr, &n, nullptr, &n, work.data(), &lwork, &info);
  if (info != 0) lapack_fail("dggev", info);
  return out;
}

ReducedPencil::ReducedPencil(const MatX& A, const MatX& E) : n_(A.rows()) {
  const int n = static_cast<int>(n_);
  if (A.cols() != n_ || E.rows() != n_ || E.cols() != n_)
    throw std::invalid_argument("ReducedPencil: matrices must be square and equal size");
  if (n_ == 0) throw std::invalid_argument("ReducedPencil: empty pencil");
  beta_threshold_ = finite_beta_threshold(A, E);

  H_ = A;
  T_ = E;
  int info = 0;

  // QR of E, fold Q into A and keep it explicitly.
  std::vector<double> tau(static_cast<size_t>(n));
  int lwork = -1;
  double wq = 0.0;
  dgeqrf_(&n, &n, T_.data(), &n, tau.data(), &wq, &lwork, &info);
  lwork = std::max(static_cast<int>(wq), 4 * n);
  std::vector<double> work(static_cast<size_t>(lwork));
  dgeqrf_(&n, &n, T_.data(), &n, tau.data(), work.data(), &lwork, &info);
  if (info != 0) lapack_fail("dgeqrf", info);

  dormqr_("L", "T", &n, &n, &n, T_.data(), &n, tau.data(), H_.data(), &n, work.data(), &lwork,
          &info);
  if (info != 0) lapack_fail("dormqr", info);

  U_ = T_;
  dorgqr_(&n, &n, &n, U_.data(), &n, tau.data(), work.data(), &lwork, &info);
  if (info != 0) lapack_fail("dorgqr", info);
  T_.triangularView<Eigen::StrictlyLower>().setZero();

  V_ = MatX::Identity(n_, n_);
  const int ilo = 1, ihi = n;
  dgghd3_("V", "V", &n, &ilo, &ihi, H_.data(), &n, T_.data(), &n, U_.data(), &n, V_.data(), &n,
          work.data(), &lwork, &info);
  if (info != 0) lapack_fail("dgghd3", info);

  // Eigenvalues from copies; dhgeqz destroys its inputs.
  MatX h = H_, t = T_;
  eig_.alpha_re.resize(n_);
  eig_.alpha_im.resize(n_);
  eig_.beta.resize(n_);
  dhgeqz_("E", "N", "N", &n, &ilo, &ihi, h.data(), &n, t.data(), &n, eig_.alpha_re.data(),
          eig_.alpha_im.data(), eig_.beta.data(), nullptr, &n, nullptr, &n, work.data(), &lwork,
          &info);
  if (info != 0) lapack_fail("dhgeqz", info);
}

CMatX ReducedPencil::solve(Complex s, const CMatX& rhs) const {
  CMatX M = s * T_.cast<Complex>() - H_.cast<Complex>();
  const double tol =
      std::numeric_limits<double>::min() * 4.0 +
      std::numeric_limits<double>::epsilon() * 1e-6 * (std::abs(s) * T_.norm() + H_.norm());
  CMatX B = U_.transpose() * rhs;
  try {
    hessenberg_solve_inplace(M, B, tol);
  } catch (const std::runtime_error&) {
    std::ostringstream os;
    os << "shifted pencil singular at s = (" << s.real() << ", " << s.imag() << ")";
    throw std::runtime_error(os.str());
  }
  return V_ * B;
}

CMatX ReducedPencil::solve_conj_transpose(Complex s, const CMatX& rhs) const {
  // (sE - A)^H = V (sT - H)^H U^T. Flipping (sT - H)^H about the
  // anti-diagonal restores upper Hessenberg form.
  const long n = n_;
  CMatX M = CMatX::Zero(n, n);
  for (long j = 0; j < n; ++j) {
    const long imax = std::min(j + 1, n - 1);
    for (long i = 0; i <= imax; ++i) {
      const long r = n - 1 - j, c = n - 1 - i;
      Complex val = -H_(r, c);
      if (r <= c) val += s * T_(r, c);
      M(i, j) = std::conj(val);
    }
  }

  const double tol =
      std::numeric_limits<double>::min() * 4.0 +
      std::numeric_limits<double>::epsilon() * 1e-6 * (std::abs(s) * T_.norm() + H_.norm());
  CMatX B = V_.transpose() * rhs;
  B = B.colwise().reverse().eval();
  try {
    hessenberg_solve_inplace(M, B, tol);
  } catch (const std::runtime_error&) {
    std::ostringstream os;
    os << "shifted pencil singular at s = (" << s.real() << ", " << s.imag() << ")";
    throw std::runtime_error(os.str());
  }
  B = B.colwise().reverse().eval();
  return U_ * B;
}

ComplexLu::ComplexLu(CMatX M) : lu_(std::move(M)), ipiv_(static_cast<size_t>(lu_.rows())) {
  const int n = static_cast<int>(lu_.rows());
  if (lu_.cols() != n) throw std::invalid_argument("ComplexLu: matrix must be square");
  int info = 0;
  zgetrf_(&n, &n, lu_.data(), &n, ipiv_.data(), &info);
  if (info > 0) throw std::runtime_error("ComplexLu: matrix is singular");
  if (info < 0) lapack_fail("zgetrf", info);
}

CMatX ComplexLu::solve(const CMatX& rhs) const {
  const int n = static_cast<int>(lu_.rows());
  const int nrhs = static_cast<int>(rhs.cols());
  CMatX x = rhs;
  int info = 0;
  zgetrs_("N", &n, &nrhs, lu_.data(), &n, ipiv_.data(), x.data(), &n, &info);
  if (info != 0) lapack_fail("zgetrs", info);
  return x;
}

CMatX ComplexLu::solve_conj_transpose(const CMatX& rhs) const {
  const int n = static_cast<int>(lu_.rows());
  const int nrhs = static_cast<int>(rhs.cols());
  CMatX x = rhs;
  int info = 0;
  zgetrs_("C", &n, &nrhs, lu_.data(), &n, ipiv_.data(), x.data(), &n, &info);
  if (info != 0) lapack_fail("zgetrs", info);
  return x;
}

}  // namespace mfgs::pencil
