#include "mfgs/mf.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "mfgs/grad.hpp"

namespace mfgs::mf {

namespace {

struct FDetail {
  analysis::NormResult norm;
};
struct HDetail {
  analysis::SpectralResult spec;
};

std::function<double()> resolve_clock(const DriverOptions& opts) {
  if (opts.clock) return opts.clock;
  const auto start = std::chrono::steady_clock::now();
  return [start]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
}

}  // namespace

void LevelSchedule::validate(int L, long N) const {
  if (size() != L)
    throw std::invalid_argument("schedule: has " + std::to_string(size()) +
                                " levels, hierarchy has " + std::to_string(L));
  for (const gs::GsParams& p : levels) p.validate(N);
}

LevelSchedule LevelSchedule::decade_defaults(int L, const std::vector<int>& max_iters,
                                             bool loosened_early_tols) {
  if (static_cast<int>(max_iters.size()) != L)
    throw std::invalid_argument("schedule: max_iters must have one entry per level");
  LevelSchedule s;
  for (int ell = 1; ell <= L; ++ell) {
    gs::GsParams p;
    p.eps0 = p.nu0 = std::max(std::pow(10.0, -ell), 1e-4);
    double tol = 1e-4;
    if (loosened_early_tols && ell < L) tol = std::max(std::pow(10.0, -ell - 1), 1e-4);
    p.eps_opt = p.nu_opt = tol;
    p.theta_eps = p.theta_nu = 0.1;
    p.beta = 1e-4;
    p.gamma = 0.5;
    p.max_iters = max_iters[static_cast<size_t>(ell - 1)];
    s.levels.push_back(p);
  }
  return s;
}

LevelEvaluator::LevelEvaluator(lti::ModelHierarchy hier, lti::ControllerLayout layout,
                               analysis::NormOptions norm_opts)
    : hier_(std::move(hier)),
      layout_(layout),
      opts_(norm_opts),
      fevals_(static_cast<size_t>(hier_.num_levels())),
      gevals_(static_cast<size_t>(hier_.num_levels())) {
  const lti::PlantDims d = hier_.plants.front().dims();
  if (layout_.m2 != d.m2 || layout_.p2 != d.p2)
    throw std::invalid_argument("LevelEvaluator: layout (m2, p2) does not match the hierarchy");
  reset_counters();
}

void LevelEvaluator::reset_counters() {
  for (auto& c : fevals_) c = 0;
  for (auto& c : gevals_) c = 0;
  posthoc_ = 0;
}

std::vector<long> LevelEvaluator::feval_counts() const {
  std::vector<long> out;
  for (auto& c : fevals_) out.push_back(c.load());
  return out;
}

std::vector<long> LevelEvaluator::geval_counts() const {
  std::vector<long> out;
  for (auto& c : gevals_) out.push_back(c.load());
  return out;
}

gs::ObjectiveEval LevelEvaluator::eval_f_impl(int ell, const VecX& x) const {
  ++fevals_[static_cast<size_t>(ell - 1)];
  const lti::Controller k = lti::unpack_controller(layout_, x);
  const lti::ClosedLoop cl = lti::assemble_closed_loop(hier_.level(ell), k, ell);
  gs::ObjectiveEval out;
  FDetail d{analysis::hinf_norm(cl, opts_)};
  out.value = d.norm.value;
  out.detail = std::move(d);
  return out;
}

double LevelEvaluator::eval_level(int ell, const VecX& x) const { return eval_f_impl(ell, x).value; }

std::optional<VecX> LevelEvaluator::grad_f(int ell, const VecX& x,
                                           const gs::ObjectiveEval* cached) const {
  ++gevals_[static_cast<size_t>(ell - 1)];
  const lti::Controller k = lti::unpack_controller(layout_, x);
  const lti::DescriptorPlant& plant = hier_.level(ell);
  try {
    if (cached && cached->detail.has_value()) {
      const FDetail& d = std::any_cast<const FDetail&>(cached->detail);
      if (!d.norm.finite()) return std::nullopt;
      return grad::grad_hinf(plant, k, d.norm).as_vector();
    }
    // No cached evaluation: locate the peak without certification rounds.
    analysis::NormOptions fast = opts_;
    fast.certify = false;
    const lti::ClosedLoop cl = lti::assemble_closed_loop(plant, k, ell);
    const analysis::NormResult norm = analysis::hinf_norm(cl, fast);
    if (!norm.finite()) return std::nullopt;
    return grad::grad_hinf(plant, k, norm).as_vector();
  } catch (const std::runtime_error&) {
    return std::nullopt;
  }
}

VecX LevelEvaluator::grad_level(int ell, const VecX& x) const {
  std::optional<VecX> g = grad_f(ell, x, nullptr);
  if (!g) throw std::runtime_error("grad_level: gradient undefined (unstable or nonsmooth point)");
  return *g;
}

gs::ObjectiveEval LevelEvaluator::eval_h_impl(int ell, const VecX& x) const {
  ++fevals_[static_cast<size_t>(ell - 1)];
  const lti::Controller k = lti::unpack_controller(layout_, x);
  const lti::ClosedLoop cl = lti::assemble_closed_loop(hier_.level(ell), k, ell);
  gs::ObjectiveEval out;
  analysis::SpectralOptions sopt;
  sopt.want_vectors = true;
  try {
    HDetail d{analysis::spectral_abscissa(cl, sopt)};
    out.value = d.spec.alpha;
    out.detail = std::move(d);
  } catch (const std::runtime_error&) {
    sopt.want_vectors = false;  // defective rightmost eigenvalue: value still exists
    HDetail d{analysis::spectral_abscissa(cl, sopt)};
    out.value = d.spec.alpha;
    out.detail = std::move(d);
  }
  return out;
}

std::optional<VecX> LevelEvaluator::grad_h_impl(int ell, const VecX& x,
                                                const gs::ObjectiveEval* cached) const {
  ++gevals_[static_cast<size_t>(ell - 1)];
  const lti::Controller k = lti::unpack_controller(layout_, x);
  const lti::DescriptorPlant& plant = hier_.level(ell);
  try {
    if (cached && cached->detail.has_value()) {
      const HDetail& d = std::any_cast<const HDetail&>(cached->detail);
      if (d.spec.right_vec.size() > 0)
        return grad::grad_specabs(plant, k, d.spec).as_vector();
    }
    const lti::ClosedLoop cl = lti::assemble_closed_loop(plant, k, ell);
    const analysis::SpectralResult spec = analysis::spectral_abscissa(cl);
    return grad::grad_specabs(plant, k, spec).as_vector();
  } catch (const std::runtime_error&) {
    return std::nullopt;
  }
}

gs::Objective LevelEvaluator::f_objective(int ell) const {
  gs::Objective obj;
  obj.value = [this, ell](const VecX& x) { return eval_f_impl(ell, x); };
  obj.gradient = [this, ell](const VecX& x, const gs::ObjectiveEval* cached) {
    return grad_f(ell, x, cached);
  };
  return obj;
}

gs::Objective LevelEvaluator::h_objective(int ell) const {
  gs::Objective obj;
  obj.value = [this, ell](const VecX& x) { return eval_h_impl(ell, x); };
  obj.gradient = [this, ell](const VecX& x, const gs::ObjectiveEval* cached) {
    return grad_h_impl(ell, x, cached);
  };
  return obj;
}

double LevelEvaluator::eval_posthoc_high(const VecX& x) const {
  ++posthoc_;
  const lti::Controller k = lti::unpack_controller(layout_, x);
  const lti::ClosedLoop cl = lti::assemble_closed_loop(hier_.top(), k, hier_.num_levels());
  return analysis::hinf_norm(cl, opts_).value;
}

namespace {

struct DriverState {
  LevelEvaluator& ev;
  std::function<double()> clock;
  MfResult result;
  long k_global = 0;

  explicit DriverState(LevelEvaluator& e, const DriverOptions& opts)
      : ev(e), clock(resolve_clock(opts)) {
    ev.reset_counters();
    result.level_traces.resize(static_cast<size_t>(ev.num_levels()));
  }

  gs::RunHooks hooks(int ell, const DriverOptions& opts) const {
    gs::RunHooks h;
    h.level = ell;
    h.k0 = k_global;
    h.threads = opts.threads;
    h.clock = clock;
    h.feval_snapshot = [this]() { return ev.feval_counts(); };
    h.geval_snapshot = [this]() { return ev.geval_counts(); };
    h.on_record = opts.on_record;
    return h;
  }

  // Stabilize on h^ell when f^ell is infinite at x; returns the (possibly
  // moved) point and the level entry evaluation when still valid.
  std::optional<gs::ObjectiveEval> ensure_finite(int ell, VecX& x, const gs::GsParams& params,
                                                 std::mt19937_64& rng, const DriverOptions& opts,
                                                 LevelReport& report) {
    gs::Objective fobj = ev.f_objective(ell);
    gs::ObjectiveEval fe = fobj.value(x);
    if (std::isfinite(fe.value)) return fe;
    gs::RunHooks h = hooks(ell, opts);
    h.on_record = nullptr;  // stabilization records stay out of the trace file
    gs::RunResult stab = gs::stabilize(ev.h_objective(ell), x, params, rng,
                                       std::numeric_limits<double>::quiet_NaN(), h);
    x = stab.x;
    report.stab_iters = static_cast<long>(stab.trace.records.size());
    result.stab_traces.push_back(std::move(stab.trace));
    return std::nullopt;
  }

  void finish(const VecX& x, double f_high) {
    result.x_final = x;
    result.controller_final = lti::unpack_controller(ev.layout(), x);
    result.f_high_final = f_high;
    result.fevals = ev.feval_counts();
    result.gevals = ev.geval_counts();
    result.posthoc_evals = ev.posthoc_evals();
    result.wall_seconds = clock();
  }
};

}  // namespace

MfResult run_hfgs(LevelEvaluator& ev, const VecX& x0, const LevelSchedule& sched,
                  std::mt19937_64& rng, const DriverOptions& opts) {
  const int L = ev.num_levels();
  sched.validate(L, ev.design_dim());
  const gs::GsParams& params = sched.levels.back();

  DriverState st(ev, opts);
  VecX x = x0;
  LevelReport report;
  report.level = L;
  report.max_iters = params.max_iters;

  std::optional<gs::ObjectiveEval> fe = st.ensure_finite(L, x, params, rng, opts, report);
  gs::RunHooks h = st.hooks(L, opts);
  if (fe) h.f_at_x0 = &*fe;
  gs::Objective fobj = ev.f_objective(L);
  gs::RunResult run = gs::run_gs(fobj, x, params, rng, h);

  report.iters = static_cast<long>(run.trace.records.size());
  report.status = run.trace.status;
  report.f_level_final = run.f_final.value;
  report.f_high_final = run.f_final.value;
  report.wall_seconds = st.clock();
  st.result.level_traces[static_cast<size_t>(L - 1)] = std::move(run.trace);
  st.result.levels.push_back(report);
  st.finish(run.x, run.f_final.value);
  return std::move(st.result);
}

MfResult run_rmfgs(LevelEvaluator& ev, const VecX& x0, const LevelSchedule& sched,
                   std::mt19937_64& rng, const DriverOptions& opts) {
  const int L = ev.num_levels();
  sched.validate(L, ev.design_dim());

  DriverState st(ev, opts);
  VecX x = x0;
  double f_high_final = std::numeric_limits<double>::quiet_NaN();

  for (int ell = 1; ell <= L; ++ell) {
    const gs::GsParams& params = sched.levels[static_cast<size_t>(ell - 1)];
    LevelReport report;
    report.level = ell;
    report.max_iters = params.max_iters;

    std::optional<gs::ObjectiveEval> fe = st.ensure_finite(ell, x, params, rng, opts, report);

    gs::RunHooks h = st.hooks(ell, opts);
    h.f_is_high = (ell == L);
    if (!h.f_is_high && opts.posthoc_per_iterate)
      h.posthoc_high = [&ev](const VecX& p) { return ev.eval_posthoc_high(p); };
    if (fe) h.f_at_x0 = &*fe;

    gs::Objective fobj = ev.f_objective(ell);
    gs::RunResult run = gs::run_gs(fobj, x, params, rng, h);

    x = run.x;
    st.k_global += static_cast<long>(run.trace.records.size());
    report.iters = static_cast<long>(run.trace.records.size());
    report.status = run.trace.status;
    report.f_level_final = run.f_final.value;
    report.f_high_final = (ell == L) ? run.f_final.value : ev.eval_posthoc_high(x);
    report.wall_seconds = st.clock();
    f_high_final = report.f_high_final;
    st.result.level_traces[static_cast<size_t>(ell - 1)] = std::move(run.trace);
    st.result.levels.push_back(report);
  }
  st.finish(x, f_high_final);
  return std::move(st.result);
}

MfResult run_amfgs(LevelEvaluator& ev, const VecX& x0, const LevelSchedule& sched,
                   std::mt19937_64& rng, const DriverOptions& opts) {
  const int L = ev.num_levels();
  sched.validate(L, ev.design_dim());

  DriverState st(ev, opts);
  VecX x = x0;
  gs::Objective fobjL = ev.f_objective(L);

  // single up-front stabilization for f^L
  LevelReport stab_report;
  std::optional<gs::ObjectiveEval> feL =
      st.ensure_finite(L, x, sched.levels.front(), rng, opts, stab_report);
  long stab_iters = stab_report.stab_iters;

  double f_high = std::numeric_limits<double>::quiet_NaN();
  for (int ell = 1; ell <= L; ++ell) {
    const gs::GsParams& params = sched.levels[static_cast<size_t>(ell - 1)];
    LevelReport report;
    report.level = ell;
    report.max_iters = params.max_iters;
    if (ell == 1) report.stab_iters = stab_iters;

    gs::RunHooks h = st.hooks(ell, opts);
    h.f_is_high = true;
    // hull = conv{grad f^L(x^k), grad f^ell(x^{k,1}), ..., grad f^ell(x^{k,q})}
    h.sample_gradient = [&ev, ell](const VecX& p) { return ev.grad_f(ell, p, nullptr); };
    if (feL) h.f_at_x0 = &*feL;

    gs::RunResult run = gs::run_gs(fobjL, x, params, rng, h);

    x = run.x;
    feL = run.f_final;  // f^L at the warm start of the next level
    st.k_global += static_cast<long>(run.trace.records.size());
    report.iters = static_cast<long>(run.trace.records.size());
    report.status = run.trace.status;
    report.f_high_final = run.f_final.value;
    report.wall_seconds = st.clock();
    f_high = run.f_final.value;
    st.result.level_traces[static_cast<size_t>(ell - 1)] = std::move(run.trace);
    st.result.levels.push_back(report);
  }
  st.finish(x, f_high);
  return std::move(st.result);
}

MfResult run_hfgs(const lti::ModelHierarchy& hier, const lti::Controller& k0,
                  const LevelSchedule& sched, std::mt19937_64& rng, const DriverOptions& opts) {
  LevelEvaluator ev(hier, {k0.order(), k0.CK.rows(), k0.BK.cols(), k0.dk_fixed_zero});
  return run_hfgs(ev, lti::pack_controller(k0), sched, rng, opts);
}

MfResult run_rmfgs(const lti::ModelHierarchy& hier, const lti::Controller& k0,
                   const LevelSchedule& sched, std::mt19937_64& rng, const DriverOptions& opts) {
  LevelEvaluator ev(hier, {k0.order(), k0.CK.rows(), k0.BK.cols(), k0.dk_fixed_zero});
  return run_rmfgs(ev, lti::pack_controller(k0), sched, rng, opts);
}

MfResult run_amfgs(const lti::ModelHierarchy& hier, const lti::Controller& k0,
                   const LevelSchedule& sched, std::mt19937_64& rng, const DriverOptions& opts) {
  LevelEvaluator ev(hier, {k0.order(), k0.CK.rows(), k0.BK.cols(), k0.dk_fixed_zero});
  return run_amfgs(ev, lti::pack_controller(k0), sched, rng, opts);
}

}  // namespace mfgs::mf
