#pragma once

#include <atomic>
#include <memory>

#include "mfgs/analysis.hpp"
#include "mfgs/gs.hpp"
#include "mfgs/lti.hpp"

namespace mfgs::mf {

// Per-level gradient-sampling parameters for levels 1..L.
struct LevelSchedule {
  std::vector<gs::GsParams> levels;

  int size() const { return static_cast<int>(levels.size()); }
  void validate(int L, long N) const;

  // Decade-decreasing initial radii/targets per level (0.1, 0.01, 0.001,
  // 1e-4, ...), theta = 0.1, beta = 1e-4, gamma = 0.5. Termination tolerances
  // are 1e-4 on every level; with loosened_early_tols the non-final levels
  // relax to 0.01, 0.001, then 1e-4.
  static LevelSchedule decade_defaults(int L, const std::vector<int>& max_iters,
                                       bool loosened_early_tols = false);
};

// Objective/gradient oracle over a hierarchy, with per-level evaluation
// counters (the cost currency). Values go through the certified norm path;
// gradients at sampled points use an uncertified peak search, per the
// gradient paradigm of sampling methods.
class LevelEvaluator {
 public:
  LevelEvaluator(lti::ModelHierarchy hier, lti::ControllerLayout layout,
                 analysis::NormOptions norm_opts = {});

  const lti::ModelHierarchy& hierarchy() const { return hier_; }
  const lti::ControllerLayout& layout() const { return layout_; }
  int num_levels() const { return hier_.num_levels(); }
  long design_dim() const { return layout_.size(); }

  // f^ell(x) = hinf norm of the level-ell closed loop; +inf when unstable.
  double eval_level(int ell, const VecX& x) const;
  // Gradient of f^ell; throws when f^ell is infinite or nonsmooth at x.
  VecX grad_level(int ell, const VecX& x) const;

  // Engine-facing objectives with caching and counting.
  gs::Objective f_objective(int ell) const;
  gs::Objective h_objective(int ell) const;
  std::optional<VecX> grad_f(int ell, const VecX& x, const gs::ObjectiveEval* cached) const;

  // f^L for a posteriori reporting; counted separately.
  double eval_posthoc_high(const VecX& x) const;

  std::vector<long> feval_counts() const;
  std::vector<long> geval_counts() const;
  long fevals(int ell) const { return fevals_[static_cast<size_t>(ell - 1)]; }
  long gevals(int ell) const { return gevals_[static_cast<size_t>(ell - 1)]; }
  long posthoc_evals() const { return posthoc_; }
  void reset_counters();

 private:
  gs::ObjectiveEval eval_f_impl(int ell, const VecX& x) const;
  gs::ObjectiveEval eval_h_impl(int ell, const VecX& x) const;
  std::optional<VecX> grad_h_impl(int ell, const VecX& x, const gs::ObjectiveEval* cached) const;

  lti::ModelHierarchy hier_;
  lti::ControllerLayout layout_;
  analysis::NormOptions opts_;
  mutable std::vector<std::atomic<long>> fevals_, gevals_;
  mutable std::atomic<long> posthoc_{0};
};

struct LevelReport {
  int level = 0;
  long iters = 0;
  int max_iters = 0;
  gs::GsStatus status = gs::GsStatus::iter_cap;
  long stab_iters = 0;
  double f_level_final = std::numeric_limits<double>::quiet_NaN();
  double f_high_final = std::numeric_limits<double>::quiet_NaN();
  double wall_seconds = 0.0;  // cumulative wall time when the level finished
};

struct MfResult {
  VecX x_final;
  lti::Controller controller_final;
  double f_high_final = std::numeric_limits<double>::quiet_NaN();
  std::vector<gs::GsTrace> level_traces;  // indexed by level - 1; unused levels stay empty
  std::vector<gs::GsTrace> stab_traces;
  std::vector<LevelReport> levels;
  std::vector<long> fevals, gevals;  // per-level totals, f and h work combined
  long posthoc_evals = 0;
  double wall_seconds = 0.0;
};

struct DriverOptions {
  int threads = 1;
  bool posthoc_per_iterate = false;  // RMFGS: f^L at every iterate of lower levels
  std::function<double()> clock;     // wall-seconds source; defaults to a steady clock
  std::function<void(const gs::TraceRecord&)> on_record;  // streaming trace sink
};

// Single-fidelity gradient sampling on the top-level objective f^L.
MfResult run_hfgs(LevelEvaluator& ev, const VecX& x0, const LevelSchedule& sched,
                  std::mt19937_64& rng, const DriverOptions& opts = {});

// Restarted multi-fidelity gradient sampling: optimize f^1, ..., f^L in
// sequence, warm-starting each level at the previous level's final iterate,
// stabilizing on h^ell whenever f^ell is infinite at entry. f^L at the
// level-final iterates is computed a posteriori for reporting.
MfResult run_rmfgs(LevelEvaluator& ev, const VecX& x0, const LevelSchedule& sched,
                   std::mt19937_64& rng, const DriverOptions& opts = {});

// Approximate multi-fidelity gradient sampling: one up-front stabilization
// for f^L, then at every level the line search and acceptance run on f^L
// while the q sampled gradients come from f^ell, anchored by the f^L gradient
// at the current iterate. f^L is monotonically nonincreasing over the whole
// run, and -g is always a descent direction for f^L.
MfResult run_amfgs(LevelEvaluator& ev, const VecX& x0, const LevelSchedule& sched,
                   std::mt19937_64& rng, const DriverOptions& opts = {});

// Spec-shaped conveniences starting from a controller.
MfResult run_hfgs(const lti::ModelHierarchy& hier, const lti::Controller& k0,
                  const LevelSchedule& sched, std::mt19937_64& rng, const DriverOptions& opts = {});
MfResult run_rmfgs(const lti::ModelHierarchy& hier, const lti::Controller& k0,
                   const LevelSchedule& sched, std::mt19937_64& rng,
                   const DriverOptions& opts = {});
MfResult run_amfgs(const lti::ModelHierarchy& hier, const lti::Controller& k0,
                   const LevelSchedule& sched, std::mt19937_64& rng,
                   const DriverOptions& opts = {});

}  // namespace mfgs::mf
