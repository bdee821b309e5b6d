#include "mfgs/bench.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "mfgs/mmio.hpp"

namespace mfgs::bench {

namespace fs = std::filesystem;
using nlohmann::json;

void HeatHierarchySpec::validate() const {
  if (levels.empty()) throw std::invalid_argument("heat spec: needs at least one level");
  for (size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 2) throw std::invalid_argument("heat spec: level dimensions must be >= 2");
    if (i > 0 && levels[i] <= levels[i - 1])
      throw std::invalid_argument("heat spec: level dimensions must be strictly increasing");
  }
  if (num_controls < 1 || num_outputs < 1)
    throw std::invalid_argument("heat spec: need at least one control and one output");
  if (num_controls > levels.front() || num_outputs > levels.front())
    throw std::invalid_argument("heat spec: more channels than coarsest-level states");
  if (!(diffusivity > 0.0)) throw std::invalid_argument("heat spec: diffusivity must be positive");
  if (!(window_width > 0.0)) throw std::invalid_argument("heat spec: window width must be positive");
}

namespace {

// Indicator bump of unit height at the grid points within the window.
MatX bump_columns(long n, double h, const std::vector<double>& centers, double width) {
  MatX B = MatX::Zero(n, static_cast<long>(centers.size()));
  for (size_t j = 0; j < centers.size(); ++j) {
    for (long i = 0; i < n; ++i) {
      const double x = static_cast<double>(i + 1) * h;
      if (std::abs(x - centers[j]) <= width) B(i, static_cast<long>(j)) = 1.0;
    }
    if (B.col(static_cast<long>(j)).isZero(0.0))
      throw std::invalid_argument("heat spec: window at " + std::to_string(centers[j]) +
                                  " contains no grid points; widen it or refine the level");
  }
  return B;
}

MatX average_rows(long n, double h, const std::vector<double>& centers, double width) {
  MatX C = MatX::Zero(static_cast<long>(centers.size()), n);
  for (size_t i = 0; i < centers.size(); ++i) {
    long cnt = 0;
    for (long k = 0; k < n; ++k) {
      const double x = static_cast<double>(k + 1) * h;
      if (std::abs(x - centers[i]) <= width) {
        C(static_cast<long>(i), k) = 1.0;
        ++cnt;
      }
    }
    if (cnt == 0)
      throw std::invalid_argument("heat spec: sensor window at " + std::to_string(centers[i]) +
                                  " contains no grid points; widen it or refine the level");
    C.row(static_cast<long>(i)) /= static_cast<double>(cnt);
  }
  return C;
}

lti::DescriptorPlant build_level(const HeatHierarchySpec& spec, long n) {
  const double h = 1.0 / static_cast<double>(n + 1);
  MatX A = MatX::Zero(n, n);
  const double s = spec.diffusivity / (h * h);
  for (long i = 0; i < n; ++i) {
    A(i, i) = -2.0 * s;
    if (i > 0) A(i, i - 1) = s;
    if (i + 1 < n) A(i, i + 1) = s;
  }
  MatX E;
  if (spec.mass_matrix) {
    E = MatX::Zero(n, n);
    for (long i = 0; i < n; ++i) {
      E(i, i) = 4.0 * h / 6.0;
      if (i > 0) E(i, i - 1) = h / 6.0;
      if (i + 1 < n) E(i, i + 1) = h / 6.0;
    }
  } else {
    E = MatX::Identity(n, n);
  }

  const long m = spec.num_controls, p = spec.num_outputs;
  std::vector<double> act(static_cast<size_t>(m)), sens(static_cast<size_t>(p));
  for (long j = 0; j < m; ++j)
    act[static_cast<size_t>(j)] = static_cast<double>(j + 1) / static_cast<double>(m + 1);
  for (long i = 0; i < p; ++i)
    sens[static_cast<size_t>(i)] = (2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(p));

  MatX B = bump_columns(n, h, act, spec.window_width);
  MatX C = average_rows(n, h, sens, spec.window_width);

  if (spec.formulation == Formulation::lqg)
    return lti::make_normalized_lqg(std::move(E), std::move(A), std::move(B), std::move(C));

  // general wiring: disturbances enter through bumps at staggered locations
  std::vector<double> dist(static_cast<size_t>(m));
  for (long j = 0; j < m; ++j)
    dist[static_cast<size_t>(j)] = (2.0 * static_cast<double>(j) + 1.0) / (2.0 * static_cast<double>(m));
  MatX B1 = bump_columns(n, h, dist, spec.window_width);
  return lti::make_general_plant(std::move(E), std::move(A), std::move(B1), std::move(B),
                                 std::move(C));
}

MatX load_rel(const fs::path& base, const std::string& name) {
  return mmio::read_matrix((base / name).string());
}

}  // namespace

lti::ModelHierarchy build_heat_hierarchy(const HeatHierarchySpec& spec) {
  spec.validate();
  std::vector<lti::DescriptorPlant> plants;
  plants.reserve(spec.levels.size());
  for (long n : spec.levels) plants.push_back(build_level(spec, n));
  return lti::ModelHierarchy::make(std::move(plants));
}

void save_hierarchy(const lti::ModelHierarchy& hier, const std::string& dir) {
  fs::create_directories(dir);
  json manifest;
  manifest["formulation"] = "raw";
  manifest["levels"] = json::array();
  for (int ell = 1; ell <= hier.num_levels(); ++ell) {
    const lti::DescriptorPlant& p = hier.level(ell);
    const std::string tag = "level" + std::to_string(ell) + "_";
    json entry;
    auto save = [&](const char* key, const MatX& m) {
      const std::string fname = tag + key + ".mtx";
      mmio::write_matrix((fs::path(dir) / fname).string(), m);
      entry[key] = fname;
    };
    save("E", p.E);
    save("A", p.A);
    save("B1", p.B1);
    save("B2", p.B2);
    save("C1", p.C1);
    save("C2", p.C2);
    save("D11", p.D11);
    save("D12", p.D12);
    save("D21", p.D21);
    manifest["levels"].push_back(entry);
  }
  std::ofstream out(fs::path(dir) / "hierarchy.json");
  if (!out) throw std::runtime_error("save_hierarchy: cannot write manifest in '" + dir + "'");
  out << manifest.dump(2) << "\n";
}

lti::ModelHierarchy load_hierarchy(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("load_hierarchy: cannot open '" + manifest_path + "'");
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw std::runtime_error("load_hierarchy: bad manifest: " + std::string(e.what()));
  }
  const fs::path base = fs::path(manifest_path).parent_path();
  const std::string formulation = manifest.value("formulation", "");
  if (!manifest.contains("levels") || !manifest["levels"].is_array() || manifest["levels"].empty())
    throw std::runtime_error("load_hierarchy: manifest needs a nonempty 'levels' array");

  std::vector<lti::DescriptorPlant> plants;
  int ell = 0;
  for (const json& entry : manifest["levels"]) {
    ++ell;
    auto need = [&](const char* key) {
      if (!entry.contains(key))
        throw std::runtime_error("load_hierarchy: level " + std::to_string(ell) +
                                 " is missing matrix '" + key + "'");
      return load_rel(base, entry[key].get<std::string>());
    };
    lti::DescriptorPlant plant;
    try {
      if (formulation == "lqg") {
        plant = lti::make_normalized_lqg(need("E"), need("A"), need("B"), need("C"));
      } else if (formulation == "general") {
        plant = lti::make_general_plant(need("E"), need("A"), need("B1"), need("B2"), need("C2"));
      } else if (formulation == "raw") {
        MatX D21 = need("D21");
        MatX D12 = need("D12");
        MatX D22 = entry.contains("D22") ? load_rel(base, entry["D22"].get<std::string>())
                                         : MatX::Zero(D21.rows(), D12.cols());
        plant = lti::DescriptorPlant::make(need("E"), need("A"), need("B1"), need("B2"),
                                           need("C1"), need("C2"), need("D11"), std::move(D12),
                                           std::move(D21), std::move(D22));
      } else {
        throw std::runtime_error("load_hierarchy: unknown formulation '" + formulation +
                                 "' (expected lqg | general | raw)");
      }
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("load_hierarchy: level " + std::to_string(ell) + ": " + e.what());
    }
    if (entry.contains("D22") && formulation != "raw") {
      const MatX D22 = load_rel(base, entry["D22"].get<std::string>());
      if (!D22.isZero(0.0))
        throw std::runtime_error("load_hierarchy: level " + std::to_string(ell) +
                                 " has a nonzero D22; feed-through is not supported");
    }
    plants.push_back(std::move(plant));
  }
  try {
    return lti::ModelHierarchy::make(std::move(plants));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("load_hierarchy: ") + e.what());
  }
}

}  // namespace mfgs::bench
