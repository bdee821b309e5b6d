#pragma once

#include <limits>

#include "mfgs/lti.hpp"
#include "mfgs/types.hpp"

namespace mfgs::analysis {

struct SpectralOptions {
  bool want_vectors = true;
  double residual_tol = 1e-8;  // relative eigenvector residual bound
};

// Rightmost finite eigenvalue of the pencil (Ac, Ec). lambda_peak is the
// upper-half-plane representative; gap is the real-part distance between the
// first and second rightmost finite eigenvalues (conjugates counted once),
// +inf when there is only one.
struct SpectralResult {
  double alpha = 0.0;
  Complex lambda_peak;
  CVecX right_vec, left_vec;  // normalized so that left^H * Ec * right == 1
  double gap = std::numeric_limits<double>::infinity();
};

struct NormOptions {
  double tol = 1e-8;               // relative tolerance on the norm value
  bool certify = true;             // run level-set rounds on the 2(n+nK) pencil
  int max_levelset_rounds = 30;
  int fallback_grid_points = 2000;
  bool force_grid_fallback = false;  // skip the pencil entirely (testing hook)
};

struct NormResult {
  double value = 0.0;        // +inf sentinel for unstable loops (hinf_norm)
  double omega_peak = 0.0;   // +inf when the supremum is only approached as w -> inf
  CVecX u_peak, v_peak;      // left/right singular vectors at the peak
  double sv_gap = 1.0;       // relative gap between the two largest singular values
  double certified_tol = 0;  // +inf when the level-set certificate was unavailable
  double alpha = std::numeric_limits<double>::quiet_NaN();  // spectral abscissa, when computed

  bool finite() const { return std::isfinite(value); }
};

// Gc(s) = Cc (s Ec - Ac)^{-1} Bc + Dc via one factorization and m1 solves.
CMatX transfer_eval(const lti::ClosedLoop& cl, Complex s);

SpectralResult spectral_abscissa(const lti::ClosedLoop& cl, const SpectralOptions& opts = {});

// sup over w >= 0 of sigma_max(Gc(i w)), including the w -> inf limit
// sigma_max(Dc). Computed from eigenvalue-guided candidates plus local
// refinement, then certified by level-set rounds: at level g, axis crossings
// of sigma_max = g are imaginary eigenvalues of a 2(n+nK) pencil; midpoints
// of crossing intervals raise the level until no crossings remain.
NormResult linf_norm(const lti::ClosedLoop& cl, const NormOptions& opts = {});
NormResult linf_norm(const lti::ClosedLoop& cl, double tol);

// The objective: linf_norm when alpha(Ac, Ec) < 0, +inf otherwise.
NormResult hinf_norm(const lti::ClosedLoop& cl, const NormOptions& opts = {});
NormResult hinf_norm(const lti::ClosedLoop& cl, double tol);

// Brute-force lower bound: max of sigma_max(Gc(i w)) over a dense log grid
// spanning [1e-8, 1e8] plus w = 0. Each point uses its own dense
// factorization, independent of the level-set path.
double linf_oracle_grid(const lti::ClosedLoop& cl, long grid_size);

}  // namespace mfgs::analysis
