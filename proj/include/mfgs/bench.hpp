#pragma once

#include <string>

#include "mfgs/lti.hpp"

namespace mfgs::bench {

enum class Formulation { lqg, general };

// 1D heat equation on [0,1], central differences with Dirichlet boundaries,
// refined per level. Actuators are indicator bumps and sensors local averages
// at fixed physical locations, so a single controller closes every level.
struct HeatHierarchySpec {
  std::vector<long> levels{16, 64, 256};  // interior grid sizes, strictly increasing
  long num_controls = 2;
  long num_outputs = 2;
  double diffusivity = 1.0;
  Formulation formulation = Formulation::lqg;
  bool mass_matrix = false;     // false: E = I; true: tridiagonal mass scaling
  double window_width = 0.08;   // half-width of actuator/sensor windows

  void validate() const;  // throws std::invalid_argument
};

lti::ModelHierarchy build_heat_hierarchy(const HeatHierarchySpec& spec);

// Writes one Matrix Market file per plant matrix plus a JSON manifest naming
// them; loads back entrywise-equal plants.
void save_hierarchy(const lti::ModelHierarchy& hier, const std::string& dir);

// Reads a manifest (formulation "lqg", "general" or "raw") and reconstructs
// the hierarchy, validating dimensions, the regularity probe and D22 == 0.
lti::ModelHierarchy load_hierarchy(const std::string& manifest_path);

}  // namespace mfgs::bench
