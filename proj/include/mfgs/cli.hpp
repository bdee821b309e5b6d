#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mfgs/bench.hpp"
#include "mfgs/gs.hpp"
#include "mfgs/mf.hpp"

namespace mfgs::cli {

enum class Method { hfgs, rmfgs, amfgs };
const char* to_string(Method m);

struct ExperimentConfig {
  Method method = Method::hfgs;
  // model source: generated heat hierarchy or an on-disk manifest
  std::optional<bench::HeatHierarchySpec> heat;
  std::optional<std::string> manifest;

  long nK = 2;
  bool dk_fixed_zero = true;
  int q = 0;  // 0 resolves to N + 2
  std::vector<int> max_iters;                 // per level; required
  std::optional<mf::LevelSchedule> schedule;  // explicit override of the defaults
  double norm_tol = 1e-8;

  uint64_t seed = 0;
  std::string out_dir = "run_out";
  int threads = 0;  // 0 = hardware concurrency
  bool deterministic_timing = false;
  bool posthoc_per_iterate = false;

  static ExperimentConfig from_json_file(const std::string& path);
  // Defaults resolved against a hierarchy with L levels and design size N.
  mf::LevelSchedule resolve_schedule(int L, long N) const;
};

// Full trace row as written to trace.csv.
struct TraceRow {
  double wall_seconds;
  int level;
  long k;
  double f_level, f_high, grad_norm, eps, nu, step_t;
  std::vector<long> fevals, gevals;
};

std::vector<TraceRow> read_trace_csv(const std::string& path);

// Executes the configured experiment; writes trace.csv, summary.json and the
// final controller matrices into the output directory. Returns a process exit
// status.
int cmd_run(const ExperimentConfig& config);

// Merges completed run directories: computes f_min across terminal values,
// emits compare.csv (wall_seconds vs f_L and relative error, level-tagged)
// and compare.json (terminal values plus time/gradient-count speedups to
// reach the HFGS terminal value).
int cmd_compare(const std::vector<std::string>& run_dirs, const std::string& out_dir);

// Loads or builds the model source and re-checks every structural invariant;
// prints a dimensions table.
int cmd_validate(const std::string& config_or_manifest_path);

// Builds the configured heat hierarchy and saves it with a manifest.
int cmd_generate(const ExperimentConfig& config, const std::string& out_dir);

}  // namespace mfgs::cli
