#pragma once

#include <any>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mfgs/types.hpp"

namespace mfgs::gs {

// One objective evaluation; `detail` carries solver context (peak frequency,
// singular vectors, eigenvectors) that the matching gradient call can reuse.
struct ObjectiveEval {
  double value = std::numeric_limits<double>::infinity();
  std::any detail;
};

// Objective plus gradient. The gradient may be asked for at points where the
// value was never computed (the sampled points); it returns nullopt where the
// objective is infinite or the gradient does not exist.
struct Objective {
  std::function<ObjectiveEval(const VecX&)> value;
  std::function<std::optional<VecX>(const VecX&, const ObjectiveEval* cached)> gradient;
};

struct GsParams {
  int q = 0;  // sample count; 0 resolves to N + 2
  double eps0 = 0.1;
  double nu0 = 0.1;
  double eps_opt = 1e-4;
  double nu_opt = 1e-4;
  double theta_eps = 0.1;
  double theta_nu = 0.1;
  double beta = 1e-4;
  double gamma = 0.5;
  int max_iters = 100;
  int max_linesearch_halvings = 50;

  int resolve_q(long N) const { return q > 0 ? q : static_cast<int>(N) + 2; }
  void validate(long N) const;  // throws std::invalid_argument
};

enum class GsStatus { converged, iter_cap, linesearch_cap, early_stop };
const char* to_string(GsStatus s);

struct TraceRecord {
  long k = 0;
  int level = 1;
  double f_level = 0.0;  // objective driving this run at x^k
  double f_high = std::numeric_limits<double>::quiet_NaN();  // f^L(x^k) when known
  double grad_norm = 0.0;
  double eps = 0.0;
  double nu = 0.0;
  double step_t = 0.0;
  int ls_evals = 0;
  double wall_seconds = 0.0;
  // <g, anchor_grad> - |g|^2; nonnegative up to QP tolerance by the hull
  // certificate, which makes -g a descent direction for the anchor objective.
  double descent_cert = std::numeric_limits<double>::quiet_NaN();
  std::vector<long> feval_counts, geval_counts;  // cumulative, per level
};

struct GsTrace {
  std::vector<TraceRecord> records;
  GsStatus status = GsStatus::iter_cap;
};

// q points i.i.d. uniform on the closed euclidean ball B(x, eps), drawn
// sequentially from the given stream.
std::vector<VecX> sample_ball(const VecX& x, double eps, int q, std::mt19937_64& rng);

struct StepInfo {
  int branch = 0;  // 1 = termination signal, 2 = shrink, 3 = line search
  double t = 0.0;
  int ls_evals = 0;
  bool ls_failed = false;
  ObjectiveEval f_next;  // evaluation at x_next when branch 3 succeeded
};

struct StepResult {
  VecX x;
  double eps = 0.0;
  double nu = 0.0;
  StepInfo info;
};

// One gradient-sampling step:
//   (i)   |g| <= nu_opt and eps <= eps_opt: no move, parameters unchanged;
//   (ii)  |g| <= nu: shrink nu and eps, no move;
//   (iii) Armijo backtracking from t = 1 with factor gamma until
//         f(x - t g) < f(x) - beta t |g|^2; infinite trial values are
//         rejected like any failed decrease.
// f_at_x, when null, is evaluated internally.
StepResult gs_step(const VecX& x, const VecX& g, const Objective& objective, double eps, double nu,
                   const GsParams& params, const ObjectiveEval* f_at_x = nullptr);

// Customization points for the multi-fidelity drivers; defaults reproduce the
// plain single-fidelity method.
struct RunHooks {
  // gradient used for the q sampled points (default: objective.gradient)
  std::function<std::optional<VecX>(const VecX&)> sample_gradient;
  // gradient at the current iterate (default: objective.gradient with cache)
  std::function<std::optional<VecX>(const VecX&, const ObjectiveEval*)> anchor_gradient;
  // checked at x^0 and after every accepted step, before sampling
  std::function<bool(const VecX&, const ObjectiveEval&)> early_stop;
  std::function<std::vector<long>()> feval_snapshot, geval_snapshot;
  std::function<double()> clock;                    // wall-seconds source
  std::function<double(const VecX&)> posthoc_high;  // optional f^L recomputation per iterate
  std::function<void(const TraceRecord&)> on_record;  // streaming sink for trace rows
  const ObjectiveEval* f_at_x0 = nullptr;  // known evaluation at x0, skips the entry evaluation
  int level = 1;
  long k0 = 0;            // global iteration offset for trace records
  bool f_is_high = true;  // trace f_high column mirrors f_level
  int threads = 1;
};

struct RunResult {
  VecX x;
  GsTrace trace;
  ObjectiveEval f_final;
};

// Gradient sampling: sample q points in B(x, eps), take the min-norm element
// of the sampled-gradient hull as the step direction, update via gs_step.
// Terminates when a step leaves (x, eps, nu) unchanged: on the termination
// triple this is `converged`, on a failed line search `linesearch_cap`.
RunResult run_gs(const Objective& objective, const VecX& x0, const GsParams& params,
                 std::mt19937_64& rng, const RunHooks& hooks = {});

// Gradient sampling applied to the stability constraint h, with early exit as
// soon as h(x) <= -margin (and strictly negative). margin = NaN resolves to
// 1e-6 * (1 + |h(x0)|). Throws when no h < 0 point is reached.
RunResult stabilize(const Objective& h_objective, const VecX& x0, const GsParams& params,
                    std::mt19937_64& rng,
                    double margin = std::numeric_limits<double>::quiet_NaN(),
                    const RunHooks& hooks = {});

}  // namespace mfgs::gs
