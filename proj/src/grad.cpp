#include "mfgs/grad.hpp"

#include <cmath>
#include <stdexcept>

#include "mfgs/pencil.hpp"

namespace mfgs::grad {

namespace {

void pack_block(VecX& x, long& at, const MatX& m) {
  for (long j = 0; j < m.cols(); ++j)
    for (long i = 0; i < m.rows(); ++i) x[at++] = m(i, j);
}

// Shared chain rule: given grad_Ac = a * c^H (plus, for the norm, the
// grad_Bc/grad_Cc/grad_Dc terms carried by u and v), the controller-block
// gradients collapse to outer products of
//   p = B2^T a_head + D12^T u   and   r = C2 c_head + D21 v.
ControllerGradient chain_realify(const lti::DescriptorPlant& plant, const lti::Controller& k,
                                 const CVecX& a, const CVecX& c, const CVecX& u, const CVecX& v,
                                 bool with_io_terms) {
  const long n = plant.A.rows();
  const long nK = k.order();

  const CVecX a_head = a.head(n), a_tail = a.tail(nK);
  const CVecX c_head = c.head(n), c_tail = c.tail(nK);

  CVecX p = plant.B2.transpose().cast<Complex>() * a_head;
  CVecX r = plant.C2.cast<Complex>() * c_head;
  if (with_io_terms) {
    p += plant.D12.transpose().cast<Complex>() * u;
    r += plant.D21.cast<Complex>() * v;
  }

  ControllerGradient g;
  g.dk_fixed_zero = k.dk_fixed_zero;
  g.dAK = (a_tail * c_tail.adjoint()).real();
  g.dBK = (a_tail * r.adjoint()).real();
  g.dCK = (p * c_tail.adjoint()).real();
  g.dDK = (p * r.adjoint()).real();
  return g;
}

}  // namespace

VecX ControllerGradient::as_vector() const {
  const long nK = dAK.rows(), p2 = dBK.cols(), m2 = dCK.rows();
  const long n_free = nK * nK + nK * p2 + m2 * nK + (dk_fixed_zero ? 0 : m2 * p2);
  VecX x(n_free);
  long at = 0;
  pack_block(x, at, dAK);
  pack_block(x, at, dBK);
  pack_block(x, at, dCK);
  if (!dk_fixed_zero) pack_block(x, at, dDK);
  return x;
}

ControllerGradient grad_hinf(const lti::DescriptorPlant& plant, const lti::Controller& k,
                             const analysis::NormResult& norm) {
  if (!norm.finite())
    throw std::runtime_error("grad_hinf: gradient undefined for unstable loop");
  if (!std::isfinite(norm.omega_peak))
    throw std::runtime_error("grad_hinf: peak not attained at a finite frequency");
  if (norm.u_peak.size() == 0 || norm.v_peak.size() == 0)
    throw std::invalid_argument("grad_hinf: norm result carries no singular vectors");

  const lti::ClosedLoop cl = lti::assemble_closed_loop(plant, k);
  CMatX Z = Complex(0.0, norm.omega_peak) * cl.Ec.cast<Complex>() - cl.Ac.cast<Complex>();
  CVecX a, c;
  try {
    pencil::ComplexLu lu(std::move(Z));
    a = lu.solve_conj_transpose(cl.Cc.transpose().cast<Complex>() * norm.u_peak);
    c = lu.solve(cl.Bc.cast<Complex>() * norm.v_peak);
  } catch (const std::runtime_error&) {
    throw std::runtime_error("grad_hinf: peak frequency coincides with an eigenvalue");
  }
  return chain_realify(plant, k, a, c, norm.u_peak, norm.v_peak, /*with_io_terms=*/true);
}

ControllerGradient grad_specabs(const lti::DescriptorPlant& plant, const lti::Controller& k,
                                const analysis::SpectralResult& spec) {
  if (spec.right_vec.size() == 0 || spec.left_vec.size() == 0)
    throw std::invalid_argument("grad_specabs: spectral result carries no eigenvectors");
  // grad_Ac = w v^H; only the Ac terms survive the chain rule.
  return chain_realify(plant, k, spec.left_vec, spec.right_vec, CVecX(), CVecX(),
                       /*with_io_terms=*/false);
}

VecX fd_gradient(const std::function<double(const VecX&)>& objective, const VecX& x, double step) {
  VecX g(x.size());
  VecX probe = x;
  for (long i = 0; i < x.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(x[i]));
    probe[i] = x[i] + h;
    const double fp = objective(probe);
    probe[i] = x[i] - h;
    const double fm = objective(probe);
    probe[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::runtime_error("fd_gradient: objective not finite at probe for coordinate " +
                               std::to_string(i));
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace mfgs::grad
