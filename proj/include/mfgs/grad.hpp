#pragma once

#include <functional>

#include "mfgs/analysis.hpp"
#include "mfgs/lti.hpp"
#include "mfgs/types.hpp"

namespace mfgs::grad {

// Gradient of a scalar objective with respect to the controller blocks.
struct ControllerGradient {
  MatX dAK, dBK, dCK, dDK;
  bool dk_fixed_zero = true;

  // Packed like the design vector: [vec(dAK); vec(dBK); vec(dCK); vec(dDK)],
  // DK block omitted when dk_fixed_zero.
  VecX as_vector() const;
};

// Gradient of the H-infinity norm at the peak frequency. Uses the closed-loop
// gradients
//   grad_Ac = Z^-H Cc^T u v^H Bc^T Z^-H,  grad_Bc = Z^-H Cc^T u v^H,
//   grad_Cc = u v^H Bc^T Z^-H,            grad_Dc = u v^H,
// with Z = i w_peak Ec - Ac, chained onto the controller blocks and
// realified. Everything reduces to rank-one outer products of two Z-solves.
ControllerGradient grad_hinf(const lti::DescriptorPlant& plant, const lti::Controller& k,
                             const analysis::NormResult& norm);

// Gradient of the spectral abscissa: grad_Ac = w v^H with w^H Ec v = 1,
// chained onto the controller blocks and realified.
ControllerGradient grad_specabs(const lti::DescriptorPlant& plant, const lti::Controller& k,
                                const analysis::SpectralResult& spec);

// Central finite differences, per-coordinate step scaled by max(1, |x_i|).
// Throws when the objective is not finite at a probe point, naming the
// coordinate.
VecX fd_gradient(const std::function<double(const VecX&)>& objective, const VecX& x,
                 double step = 1e-6);

}  // namespace mfgs::grad
