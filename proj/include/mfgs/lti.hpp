#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mfgs/types.hpp"

namespace mfgs::lti {

struct PlantDims {
  long n = 0;   // states
  long m1 = 0;  // disturbances
  long m2 = 0;  // controls
  long p1 = 0;  // performance outputs
  long p2 = 0;  // measurements
};

// Open-loop descriptor system
//   E x' = A x + B1 w + B2 u
//   z    = C1 x + D11 w + D12 u
//   y    = C2 x + D21 w  (D22 must be zero)
// The pencil lambda*E - A must be regular; this is probed at construction.
struct DescriptorPlant {
  MatX E, A, B1, B2, C1, C2, D11, D12, D21, D22;

  PlantDims dims() const;

  // Validates dimensional consistency, D22 == 0 and pencil regularity.
  // Throws std::invalid_argument naming the offending block.
  static DescriptorPlant make(MatX E, MatX A, MatX B1, MatX B2, MatX C1, MatX C2, MatX D11,
                              MatX D12, MatX D21, MatX D22);
};

// Fixed-order output-feedback controller
//   xK' = AK xK + BK y
//   u   = CK xK + DK y
struct Controller {
  MatX AK, BK, CK, DK;
  bool dk_fixed_zero = true;

  long order() const { return AK.rows(); }

  static Controller make(MatX AK, MatX BK, MatX CK, MatX DK, bool dk_fixed_zero);
  // Zero controller of the given layout.
  static Controller zero(long nK, long m2, long p2, bool dk_fixed_zero);
};

// Shape of the design vector: x = [vec(AK); vec(BK); vec(CK); vec(DK)]
// with column-major vec. DK is omitted when dk_fixed_zero.
struct ControllerLayout {
  long nK = 0;
  long m2 = 0;
  long p2 = 0;
  bool dk_fixed_zero = true;

  long size() const {
    long n = nK * nK + nK * m2 + p2 * nK;
    return dk_fixed_zero ? n : n + p2 * m2;
  }
  bool matches(const Controller& k) const;
};

VecX pack_controller(const Controller& k);
Controller unpack_controller(const ControllerLayout& layout, const VecX& x);

struct ClosedLoop {
  MatX Ec, Ac, Bc, Cc, Dc;
  std::optional<int> level;

  long order() const { return Ac.rows(); }
};

// Closed-loop system matrices:
//   Ec = [E 0; 0 I],  Ac = [A + B2 DK C2, B2 CK; BK C2, AK],
//   Bc = [B1 + B2 DK D21; BK D21],
//   Cc = [C1 + D12 DK C2, D12 CK],  Dc = D11 + D12 DK D21.
ClosedLoop assemble_closed_loop(const DescriptorPlant& plant, const Controller& k,
                                std::optional<int> level = std::nullopt);

// Normalized LQG wiring: disturbances enter through the control channel and
// the measurement channel, performance is [Cx; u].
//   B1 = [B 0], B2 = B, C1 = [C; 0], C2 = C,
//   D11 = 0, D12 = [0; I_m], D21 = [0 I_p].
DescriptorPlant make_normalized_lqg(MatX E, MatX A, MatX B, MatX C);

// Second plant wiring: C1 = C2, D11 = 0, and D12/D21 are leading
// column/row slices of identity matrices sized max(m2,p2) and max(m1,p2).
DescriptorPlant make_general_plant(MatX E, MatX A, MatX B1, MatX B2, MatX C2);

// Ordered plants, level 1 (cheapest) .. L (finest). All levels share the
// external dimensions (m1, m2, p1, p2) so one controller closes every level;
// state dimensions are nondecreasing.
struct ModelHierarchy {
  std::vector<DescriptorPlant> plants;

  int num_levels() const { return static_cast<int>(plants.size()); }
  const DescriptorPlant& level(int ell) const;  // 1-based
  const DescriptorPlant& top() const { return plants.back(); }
  ControllerLayout layout(long nK, bool dk_fixed_zero) const;

  static ModelHierarchy make(std::vector<DescriptorPlant> plants);
};

}  // namespace mfgs::lti
