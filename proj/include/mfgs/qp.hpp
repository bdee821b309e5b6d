#pragma once

#include <vector>

#include "mfgs/types.hpp"

namespace mfgs::qp {

// Minimum-norm element of conv{columns}: g_star = G * weights with weights on
// the simplex, and the variational certificate <g_star, g_i - g_star> >= -tol
// for every column.
struct HullProblem {
  MatX G;        // N x (q+1), the input columns
  VecX weights;  // simplex weights, length q+1
  VecX g_star;   // = G * weights

  double certificate() const;  // min_i <g_star, g_i - g_star>
};

// Wolfe's min-norm-point algorithm (exact, finitely terminating). Duplicate
// columns are deduplicated to 1e-14 before solving; their weight lands on the
// first occurrence.
HullProblem min_norm_hull(const std::vector<VecX>& columns);

}  // namespace mfgs::qp
