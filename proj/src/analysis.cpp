#include "mfgs/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "mfgs/pencil.hpp"

namespace mfgs::analysis {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct FiniteEig {
  Complex lambda;
};

std::vector<Complex> finite_eigenvalues(const pencil::GeneralizedEigenvalues& eig, double thr) {
  std::vector<Complex> out;
  out.reserve(static_cast<size_t>(eig.size()));
  for (long i = 0; i < eig.size(); ++i) {
    if (std::abs(eig.beta[i]) > thr) out.push_back(eig.eigenvalue(i));
  }
  return out;
}

double rightmost_real_part(const std::vector<Complex>& eigs) {
  double a = -kInf;
  for (const Complex& l : eigs) a = std::max(a, l.real());
  return a;
}

// sigma_max and optional singular vectors of a complex matrix.
double sigma_max(const CMatX& G) {
  if (G.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatX> svd(G);
  return svd.singularValues()[0];
}

struct SvdPeak {
  double sigma = 0.0;
  CVecX u, v;
  double sv_gap = 1.0;
};

SvdPeak sigma_max_vectors(const CMatX& G) {
  SvdPeak out;
  if (G.size() == 0) return out;
  Eigen::JacobiSVD<CMatX> svd(G, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.sigma = svd.singularValues()[0];
  out.u = svd.matrixU().col(0);
  out.v = svd.matrixV().col(0);
  if (svd.singularValues().size() > 1 && out.sigma > 0.0)
    out.sv_gap = (out.sigma - svd.singularValues()[1]) / out.sigma;
  return out;
}

// Frequency-sweep engine over one reduced pencil of (Ac, Ec).
class NormEngine {
 public:
  NormEngine(const lti::ClosedLoop& cl, const NormOptions& opts)
      : cl_(cl), opts_(opts), rp_(cl.Ac, cl.Ec) {
    finite_ = finite_eigenvalues(rp_.eigenvalues(), rp_.beta_threshold());
    alpha_ = finite_.empty() ? -kInf : rightmost_real_part(finite_);
  }

  double alpha() const { return alpha_; }
  bool has_finite_eigs() const { return !finite_.empty(); }

  // sigma_max(Gc(i w)); +inf when the shifted pencil is singular at i w.
  double sigma_at(double omega) const {
    CMatX G;
    if (!gain_at(omega, G)) return kInf;
    return sigma_max(G);
  }

  bool gain_at(double omega, CMatX& G) const {
    try {
      CMatX X = rp_.solve(Complex(0.0, omega), cl_.Bc.cast<Complex>());
      G = cl_.Cc.cast<Complex>() * X + cl_.Dc.cast<Complex>();
      return true;
    } catch (const std::runtime_error&) {
      return false;
    }
  }

  NormResult compute();

 private:
  struct Peak {
    double omega;
    double sigma;
  };

  std::vector<double> candidate_frequencies() const;
  Peak refine_peak(double omega_lo, double omega0, double omega_hi) const;
  void check_improper(double interior, double d_limit) const;
  // Frequencies w >= 0 where sigma_max crosses level g, from the imaginary
  // eigenvalues of the 2(n+nK) pencil. Returns false when the pencil is
  // numerically unusable.
  bool level_crossings(double gamma, std::vector<double>& out) const;
  NormResult finish(Peak best) const;
  NormResult grid_fallback() const;

  const lti::ClosedLoop& cl_;
  NormOptions opts_;
  pencil::ReducedPencil rp_;
  std::vector<Complex> finite_;
  double alpha_ = -kInf;
};

std::vector<double> NormEngine::candidate_frequencies() const {
  std::vector<double> cands;
  cands.push_back(0.0);
  double max_mag = 1.0, min_mag = kInf;
  for (const Complex& l : finite_) {
    const double mag = std::abs(l);
    if (mag > 0.0) {
      max_mag = std::max(max_mag, mag);
      min_mag = std::min(min_mag, mag);
      cands.push_back(mag);
    }
    if (std::abs(l.imag()) > 0.0) cands.push_back(std::abs(l.imag()));
  }
  if (!std::isfinite(min_mag)) min_mag = 1.0;
  // log-spaced backbone around the pole magnitudes
  const double lo = std::max(1e-8, 0.01 * min_mag), hi = 100.0 * max_mag;
  const int nb = 24;
  for (int i = 0; i <= nb; ++i)
    cands.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / nb));
  std::sort(cands.begin(), cands.end());
  cands.erase(std::unique(cands.begin(), cands.end(),
                          [](double a, double b) { return b <= a * (1.0 + 1e-9); }),
              cands.end());
  return cands;
}

NormEngine::Peak NormEngine::refine_peak(double omega_lo, double omega0, double omega_hi) const {
  // Brent's method on -sigma(w) over [omega_lo, omega_hi].
  double a = std::max(omega_lo, 0.0);
  double b = std::max(omega_hi, a + 1e-14);
  constexpr double gold = 0.3819660112501051;
  double x = std::min(std::max(omega0, a), b), w = x, v = x;
  double fx = -sigma_at(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  for (int it = 0; it < 32; ++it) {
    const double m = 0.5 * (a + b);
    const double tol1 = 1e-10 * std::abs(x) + 1e-15;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) break;
    double u;
    bool parabolic = false;
    if (std::abs(e) > tol1) {
      // trial parabolic fit through x, w, v
      const double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double e_old = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * e_old) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        u = x + d;
        if (u - a < tol2 || b - u < tol2) d = (x < m) ? tol1 : -tol1;
        parabolic = true;
      }
    }
    if (!parabolic) {
      e = (x < m) ? (b - x) : (a - x);
      d = gold * e;
    }
    u = (std::abs(d) >= tol1) ? (x + d) : (x + ((d > 0.0) ? tol1 : -tol1));
    const double fu = -sigma_at(u);
    if (fu <= fx) {
      if (u < x) b = x; else a = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  return {x, -fx};
}

void NormEngine::check_improper(double interior, double d_limit) const {
  double max_mag = 1.0;
  for (const Complex& l : finite_) max_mag = std::max(max_mag, std::abs(l));
  const double w0 = std::max(1e8, 1e3 * max_mag);
  const double ref = std::max(interior, d_limit);
  const double v1 = sigma_at(w0);
  if (!(v1 > ref * (1.0 + 1e-6))) return;
  const double v2 = sigma_at(w0 * 1e2);
  const double v3 = sigma_at(w0 * 1e4);
  if (v2 > v1 * (1.0 + 1e-9) && v3 > v2 * (1.0 + 1e-9))
    throw std::runtime_error("linf_norm: improper or polynomial part detected");
}

bool NormEngine::level_crossings(double gamma, std::vector<double>& out) const {
  const MatX& A = cl_.Ac;
  const MatX& E = cl_.Ec;
  const MatX& B = cl_.Bc;
  const MatX& C = cl_.Cc;
  const MatX& D = cl_.Dc;
  const long n = A.rows(), m = B.cols(), p = C.rows();

  // gamma exceeds sigma_max(D) here, so g^2 I - D^T D and g^2 I - D D^T are SPD.
  MatX Rpos = gamma * gamma * MatX::Identity(m, m) - D.transpose() * D;
  MatX Spos = gamma * gamma * MatX::Identity(p, p) - D * D.transpose();
  Eigen::LDLT<MatX> Rld(Rpos), Sld(Spos);
  if (Rld.info() != Eigen::Success || Sld.info() != Eigen::Success) return false;
  if ((Rld.vectorD().array() <= 0.0).any() || (Sld.vectorD().array() <= 0.0).any()) return false;

  MatX M(2 * n, 2 * n);
  MatX M11 = A + B * Rld.solve(D.transpose() * C);
  M.topLeftCorner(n, n) = M11;
  M.topRightCorner(n, n) = gamma * (B * Rld.solve(B.transpose()));
  M.bottomLeftCorner(n, n) = -gamma * (C.transpose() * Sld.solve(C));
  M.bottomRightCorner(n, n) = -M11.transpose();

  MatX N = MatX::Zero(2 * n, 2 * n);
  N.topLeftCorner(n, n) = E;
  N.bottomRightCorner(n, n) = E.transpose();

  pencil::GeneralizedEigenvalues eig;
  try {
    eig = pencil::generalized_eigenvalues(M, N);
  } catch (const std::runtime_error&) {
    return false;
  }
  const double thr = pencil::finite_beta_threshold(M, N);

  out.clear();
  for (long i = 0; i < eig.size(); ++i) {
    if (std::abs(eig.beta[i]) <= thr) continue;
    const Complex l = eig.eigenvalue(i);
    if (std::abs(l.real()) <= 1e-7 * std::max(1.0, std::abs(l))) out.push_back(std::abs(l.imag()));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](double a, double b) { return b <= a * (1.0 + 1e-9) + 1e-12; }),
            out.end());
  return true;
}

NormResult NormEngine::finish(Peak best) const {
  NormResult res;
  res.alpha = alpha_;
  res.value = best.sigma;
  res.omega_peak = best.omega;
  if (std::isfinite(best.omega)) {
    CMatX G;
    if (gain_at(best.omega, G)) {
      SvdPeak sp = sigma_max_vectors(G);
      res.value = sp.sigma;
      res.u_peak = sp.u;
      res.v_peak = sp.v;
      res.sv_gap = sp.sv_gap;
    }
  } else {
    SvdPeak sp = sigma_max_vectors(cl_.Dc.cast<Complex>());
    res.u_peak = sp.u;
    res.v_peak = sp.v;
    res.sv_gap = sp.sv_gap;
  }
  return res;
}

NormResult NormEngine::grid_fallback() const {
  const int npts = std::max(opts_.fallback_grid_points, 16);
  double max_mag = 1.0, min_mag = 1.0;
  for (const Complex& l : finite_) {
    const double m = std::abs(l);
    if (m > 0.0) {
      max_mag = std::max(max_mag, m);
      min_mag = std::min(min_mag, m);
    }
  }
  const double lo = std::max(1e-8, 1e-3 * min_mag), hi = 1e3 * max_mag;
  std::vector<double> ws(static_cast<size_t>(npts) + 1);
  ws[0] = 0.0;
  for (int i = 0; i < npts; ++i)
    ws[static_cast<size_t>(i) + 1] = lo * std::pow(hi / lo, static_cast<double>(i) / (npts - 1));
  std::vector<double> ss(ws.size());
  for (size_t i = 0; i < ws.size(); ++i) ss[i] = sigma_at(ws[i]);

  // local maxima, best 10, refined
  std::vector<size_t> locals;
  for (size_t i = 0; i < ws.size(); ++i) {
    const double prev = (i == 0) ? -kInf : ss[i - 1];
    const double next = (i + 1 == ws.size()) ? -kInf : ss[i + 1];
    if (ss[i] >= prev && ss[i] >= next) locals.push_back(i);
  }
  std::sort(locals.begin(), locals.end(), [&](size_t a, size_t b) { return ss[a] > ss[b]; });
  if (locals.size() > 10) locals.resize(10);

  Peak best{0.0, ss[0]};
  for (size_t i = 0; i < ws.size(); ++i)
    if (ss[i] > best.sigma) best = {ws[i], ss[i]};
  for (size_t idx : locals) {
    const double wl = (idx == 0) ? ws[0] : ws[idx - 1];
    const double wh = (idx + 1 == ws.size()) ? ws[idx] * 100.0 : ws[idx + 1];
    Peak p = refine_peak(wl, std::max(ws[idx], 0.5 * (wl + wh) * 1e-12), wh);
    if (p.sigma > best.sigma) best = p;
  }

  const double d_limit = sigma_max(cl_.Dc.cast<Complex>());
  check_improper(best.sigma, d_limit);
  NormResult res;
  if (d_limit > best.sigma) {
    res = finish({kInf, d_limit});
    res.value = d_limit;
  } else {
    res = finish(best);
  }
  res.certified_tol = kInf;
  return res;
}

NormResult NormEngine::compute() {
  if (!has_finite_eigs())
    throw std::runtime_error("linf_norm: nilpotent-only pencil, no finite eigenvalues");
  if (opts_.force_grid_fallback) return grid_fallback();

  // Interior candidates: w = 0, pole frequencies, log backbone.
  const std::vector<double> cands = candidate_frequencies();
  Peak best{0.0, -1.0};
  std::vector<std::pair<double, size_t>> ranked;  // sigma, candidate index
  std::vector<double> sigmas(cands.size());
  for (size_t i = 0; i < cands.size(); ++i) {
    sigmas[i] = sigma_at(cands[i]);
    if (sigmas[i] > best.sigma) best = {cands[i], sigmas[i]};
    ranked.push_back({sigmas[i], i});
  }
  if (std::isinf(best.sigma)) {
    // pole on (or numerically on) the imaginary axis
    NormResult res = finish({best.omega, kInf});
    res.value = kInf;
    res.certified_tol = 0.0;
    return res;
  }

  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  const size_t refine_count = std::min<size_t>(ranked.size(), opts_.certify ? 4 : 3);
  for (size_t r = 0; r < refine_count; ++r) {
    const size_t idx = ranked[r].second;
    const double w = cands[idx];
    const double wl = (idx == 0) ? 0.0 : cands[idx - 1];
    const double wh = (idx + 1 == cands.size()) ? (w > 0 ? 10.0 * w : 1.0) : cands[idx + 1];
    Peak p = refine_peak(wl, w, wh);
    if (p.sigma > best.sigma) best = p;
  }

  const double d_limit = sigma_max(cl_.Dc.cast<Complex>());
  check_improper(best.sigma, d_limit);
  if (d_limit > best.sigma * (1.0 + opts_.tol)) best = {kInf, d_limit};

  if (best.sigma <= 0.0) {
    // identically zero transfer function
    NormResult res = finish({0.0, 0.0});
    res.certified_tol = 0.0;
    return res;
  }

  if (!opts_.certify) {
    NormResult res = finish(best);
    res.certified_tol = kInf;
    return res;
  }

  // Level-set rounds: certify or climb.
  double certified = kInf;
  for (int round = 0; round < opts_.max_levelset_rounds; ++round) {
    const double gamma_test = best.sigma * (1.0 + 2.0 * opts_.tol);
    std::vector<double> crossings;
    if (!level_crossings(gamma_test, crossings)) {
      NormResult res = grid_fallback();
      res.alpha = alpha_;
      return res;
    }
    if (crossings.empty()) {
      certified = 2.0 * opts_.tol;
      break;
    }
    Peak improved = best;
    for (size_t i = 0; i + 1 < crossings.size(); ++i) {
      const double mid = 0.5 * (crossings[i] + crossings[i + 1]);
      const double s = sigma_at(mid);
      if (s > improved.sigma) improved = {mid, s};
    }
    if (!(improved.sigma > best.sigma * (1.0 + opts_.tol))) {
      // no level improvement above tolerance: treat remaining crossings as
      // spurious near-axis eigenvalues
      certified = 2.0 * opts_.tol;
      break;
    }
    Peak refined = refine_peak(improved.omega * 0.5, improved.omega, improved.omega * 2.0);
    best = (refined.sigma > improved.sigma) ? refined : improved;
  }

  NormResult res = finish(best);
  res.certified_tol = certified;
  return res;
}

}  // namespace

CMatX transfer_eval(const lti::ClosedLoop& cl, Complex s) {
  CMatX Z = s * cl.Ec.cast<Complex>() - cl.Ac.cast<Complex>();
  try {
    pencil::ComplexLu lu(std::move(Z));
    return cl.Cc.cast<Complex>() * lu.solve(cl.Bc.cast<Complex>()) + cl.Dc.cast<Complex>();
  } catch (const std::runtime_error&) {
    std::ostringstream os;
    os << "transfer_eval: pencil singular at s = (" << s.real() << ", " << s.imag() << ")";
    throw std::runtime_error(os.str());
  }
}

SpectralResult spectral_abscissa(const lti::ClosedLoop& cl, const SpectralOptions& opts) {
  pencil::ReducedPencil rp(cl.Ac, cl.Ec);
  const pencil::GeneralizedEigenvalues& eig = rp.eigenvalues();
  const double thr = rp.beta_threshold();

  SpectralResult res;
  bool any = false;
  // Upper-half-plane representatives for the gap; conjugate pairs from the
  // real QZ carry matching real parts.
  std::vector<double> upper_res;
  for (long i = 0; i < eig.size(); ++i) {
    if (std::abs(eig.beta[i]) <= thr) continue;
    const Complex l = eig.eigenvalue(i);
    if (l.imag() >= 0.0) upper_res.push_back(l.real());
    if (!any || l.real() > res.lambda_peak.real() ||
        (l.real() == res.lambda_peak.real() && l.imag() > res.lambda_peak.imag() &&
         res.lambda_peak.imag() < 0.0)) {
      res.lambda_peak = l;
      any = true;
    }
    // prefer the Im >= 0 member of a conjugate pair
    if (any && l.real() == res.lambda_peak.real() && l.imag() > 0.0 &&
        res.lambda_peak.imag() < 0.0)
      res.lambda_peak = l;
  }
  if (!any) throw std::runtime_error("spectral_abscissa: nilpotent-only pencil");
  res.alpha = res.lambda_peak.real();

  std::sort(upper_res.begin(), upper_res.end(), std::greater<double>());
  if (upper_res.size() >= 2) res.gap = upper_res[0] - upper_res[1];

  if (!opts.want_vectors) return res;

  // Inverse iteration on (Ac - lambda Ec) for the right and left eigenvectors.
  const Complex lambda = res.lambda_peak;
  const double scale = cl.Ac.norm() + std::abs(lambda) * cl.Ec.norm();
  const CMatX Ecc = cl.Ec.cast<Complex>();
  const CMatX Acc = cl.Ac.cast<Complex>();
  const long n = cl.Ac.rows();

  Complex shift = lambda;
  for (int attempt = 0; attempt < 3; ++attempt) {
    try {
      pencil::ComplexLu lu(Acc - shift * Ecc);
      CVecX v = CVecX::Ones(n) / std::sqrt(static_cast<double>(n));
      CVecX w = v;
      bool ok_r = false, ok_l = false;
      for (int it = 0; it < 4 && !(ok_r && ok_l); ++it) {
        if (!ok_r) {
          v = lu.solve(v);
          v /= v.norm();
          ok_r = (Acc * v - lambda * (Ecc * v)).norm() <= opts.residual_tol * scale;
        }
        if (!ok_l) {
          w = lu.solve_conj_transpose(w);
          w /= w.norm();
          ok_l = (Acc.adjoint() * w - std::conj(lambda) * (Ecc.adjoint() * w)).norm() <=
                 opts.residual_tol * scale;
        }
      }
      if (!(ok_r && ok_l)) {
        shift = lambda + Complex(1.0, 1.0) * (1e-12 * scale * (attempt + 1));
        continue;
      }
      const Complex ip = (w.adjoint() * (Ecc * v))(0, 0);
      if (std::abs(ip) <= 1e-12 * cl.Ec.norm() + 1e-300)
        throw std::runtime_error(
            "spectral_abscissa: rightmost eigenvalue is defective (w^H Ec v ~ 0)");
      w /= std::conj(ip);
      res.right_vec = v;
      res.left_vec = w;
      return res;
    } catch (const std::runtime_error& e) {
      if (std::string(e.what()).find("defective") != std::string::npos) throw;
      shift = lambda + Complex(1.0, 1.0) * (1e-12 * scale * (attempt + 1));
    }
  }
  throw std::runtime_error("spectral_abscissa: eigenvector iteration failed to converge");
}

NormResult linf_norm(const lti::ClosedLoop& cl, const NormOptions& opts) {
  NormEngine engine(cl, opts);
  return engine.compute();
}

NormResult linf_norm(const lti::ClosedLoop& cl, double tol) {
  NormOptions opts;
  opts.tol = tol;
  return linf_norm(cl, opts);
}

NormResult hinf_norm(const lti::ClosedLoop& cl, const NormOptions& opts) {
  NormEngine engine(cl, opts);
  if (!engine.has_finite_eigs())
    throw std::runtime_error("hinf_norm: nilpotent-only pencil, no finite eigenvalues");
  if (engine.alpha() >= 0.0) {
    NormResult res;
    res.value = kInf;
    res.alpha = engine.alpha();
    res.omega_peak = std::numeric_limits<double>::quiet_NaN();
    res.certified_tol = 0.0;
    return res;
  }
  return engine.compute();
}

NormResult hinf_norm(const lti::ClosedLoop& cl, double tol) {
  NormOptions opts;
  opts.tol = tol;
  return hinf_norm(cl, opts);
}

double linf_oracle_grid(const lti::ClosedLoop& cl, long grid_size) {
  double best = 0.0;
  const CMatX Ec = cl.Ec.cast<Complex>(), Ac = cl.Ac.cast<Complex>();
  const CMatX Bc = cl.Bc.cast<Complex>(), Cc = cl.Cc.cast<Complex>(), Dc = cl.Dc.cast<Complex>();
  auto eval = [&](double w) {
    try {
      pencil::ComplexLu lu(Complex(0.0, w) * Ec - Ac);
      return sigma_max(Cc * lu.solve(Bc) + Dc);
    } catch (const std::runtime_error&) {
      return kInf;
    }
  };
  best = eval(0.0);
  for (long i = 0; i < grid_size; ++i) {
    const double w = 1e-8 * std::pow(1e16, static_cast<double>(i) / (grid_size - 1));
    best = std::max(best, eval(w));
  }
  return best;
}

}  // namespace mfgs::analysis
