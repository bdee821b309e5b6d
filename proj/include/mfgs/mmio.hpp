#pragma once

#include <string>

#include "mfgs/types.hpp"

namespace mfgs::mmio {

// Reads a Matrix Market file (array or coordinate format, real data,
// general/symmetric/skew-symmetric storage) into a dense matrix.
MatX read_matrix(const std::string& path);

// Writes a dense matrix in Matrix Market array format with full
// double precision.
void write_matrix(const std::string& path, const MatX& m);

}  // namespace mfgs::mmio
