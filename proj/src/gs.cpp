#include "mfgs/gs.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "mfgs/qp.hpp"

namespace mfgs::gs {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

double now_or_zero(const RunHooks& hooks) { return hooks.clock ? hooks.clock() : 0.0; }

}  // namespace

void GsParams::validate(long N) const {
  require(resolve_q(N) >= N + 1, "GsParams: q must be at least N + 1 = " + std::to_string(N + 1));
  require(eps0 > 0.0 && nu0 > 0.0, "GsParams: eps0 and nu0 must be positive");
  // Table-style schedules set eps_opt == eps0 on the deepest levels, so the
  // upper bound is inclusive.
  require(eps_opt > 0.0 && eps_opt <= eps0, "GsParams: eps_opt must lie in (0, eps0]");
  require(nu_opt > 0.0 && nu_opt <= nu0, "GsParams: nu_opt must lie in (0, nu0]");
  require(theta_eps > 0.0 && theta_eps < 1.0, "GsParams: theta_eps must lie in (0,1)");
  require(theta_nu > 0.0 && theta_nu < 1.0, "GsParams: theta_nu must lie in (0,1)");
  require(beta > 0.0 && beta < 1.0, "GsParams: beta must lie in (0,1)");
  require(gamma > 0.0 && gamma < 1.0, "GsParams: gamma must lie in (0,1)");
  require(max_iters >= 0, "GsParams: max_iters must be nonnegative");
  require(max_linesearch_halvings >= 0, "GsParams: max_linesearch_halvings must be nonnegative");
}

const char* to_string(GsStatus s) {
  switch (s) {
    case GsStatus::converged: return "converged";
    case GsStatus::iter_cap: return "iter_cap";
    case GsStatus::linesearch_cap: return "linesearch_cap";
    case GsStatus::early_stop: return "early_stop";
  }
  return "unknown";
}

std::vector<VecX> sample_ball(const VecX& x, double eps, int q, std::mt19937_64& rng) {
  require(eps > 0.0, "sample_ball: eps must be positive");
  require(q >= 1, "sample_ball: q must be at least 1");
  const long N = x.size();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<VecX> points;
  points.reserve(static_cast<size_t>(q));
  for (int i = 0; i < q; ++i) {
    VecX z(N);
    for (long j = 0; j < N; ++j) z[j] = normal(rng);
    const double r = eps * std::pow(uniform(rng), 1.0 / static_cast<double>(N));
    const double zn = z.norm();
    points.push_back(zn > 0.0 ? VecX(x + (r / zn) * z) : x);
  }
  return points;
}

StepResult gs_step(const VecX& x, const VecX& g, const Objective& objective, double eps, double nu,
                   const GsParams& params, const ObjectiveEval* f_at_x) {
  StepResult out;
  out.eps = eps;
  out.nu = nu;
  const double gn = g.norm();

  if (gn <= params.nu_opt && eps <= params.eps_opt) {
    out.info.branch = 1;
    out.x = x;
    return out;
  }
  if (gn <= nu) {
    out.info.branch = 2;
    out.nu = params.theta_nu * nu;
    out.eps = params.theta_eps * eps;
    out.x = x;
    return out;
  }

  out.info.branch = 3;
  ObjectiveEval fx_local;
  if (!f_at_x) {
    fx_local = objective.value(x);
    f_at_x = &fx_local;
  }
  const double f_ref = f_at_x->value;
  const double g2 = gn * gn;
  double t = 1.0;
  for (int halv = 0; halv <= params.max_linesearch_halvings; ++halv) {
    ObjectiveEval trial = objective.value(x - t * g);
    ++out.info.ls_evals;
    if (trial.value < f_ref - params.beta * t * g2) {
      out.info.t = t;
      out.info.f_next = std::move(trial);
      out.x = x - t * g;
      return out;
    }
    t *= params.gamma;
  }
  out.info.ls_failed = true;
  out.x = x;  // t_hat = 0
  return out;
}

RunResult run_gs(const Objective& objective, const VecX& x0, const GsParams& params,
                 std::mt19937_64& rng, const RunHooks& hooks) {
  const long N = x0.size();
  params.validate(N);
  const int q = params.resolve_q(N);

  auto anchor_grad = [&](const VecX& x, const ObjectiveEval* cached) {
    return hooks.anchor_gradient ? hooks.anchor_gradient(x, cached) : objective.gradient(x, cached);
  };
  auto sample_grad = [&](const VecX& x) {
    return hooks.sample_gradient ? hooks.sample_gradient(x) : objective.gradient(x, nullptr);
  };

  RunResult out;
  out.x = x0;
  out.trace.status = GsStatus::iter_cap;
  out.f_final = hooks.f_at_x0 ? *hooks.f_at_x0 : objective.value(x0);
  if (!std::isfinite(out.f_final.value))
    throw std::runtime_error("run_gs: objective is not finite at x0; call stabilize first");

  double eps = params.eps0, nu = params.nu0;

  for (int iter = 0; iter < params.max_iters; ++iter) {
    if (hooks.early_stop && hooks.early_stop(out.x, out.f_final)) {
      out.trace.status = GsStatus::early_stop;
      return out;
    }

    const std::vector<VecX> samples = sample_ball(out.x, eps, q, rng);

    std::optional<VecX> anchor = anchor_grad(out.x, &out.f_final);
    if (!anchor)
      throw std::runtime_error("run_gs: gradient unavailable at the current iterate");

    std::vector<std::optional<VecX>> sampled(samples.size());
    if (hooks.threads > 1 && samples.size() > 1) {
      const int nt = std::min<int>(hooks.threads, static_cast<int>(samples.size()));
      std::vector<std::thread> pool;
      pool.reserve(static_cast<size_t>(nt));
      std::atomic<size_t> next{0};
      for (int t = 0; t < nt; ++t) {
        pool.emplace_back([&]() {
          for (size_t i = next.fetch_add(1); i < samples.size(); i = next.fetch_add(1))
            sampled[i] = sample_grad(samples[i]);
        });
      }
      for (auto& th : pool) th.join();
    } else {
      for (size_t i = 0; i < samples.size(); ++i) sampled[i] = sample_grad(samples[i]);
    }

    std::vector<VecX> columns;
    columns.reserve(samples.size() + 1);
    columns.push_back(*anchor);
    for (auto& sg : sampled)
      if (sg) columns.push_back(std::move(*sg));

    const qp::HullProblem hull = qp::min_norm_hull(columns);
    const VecX& g = hull.g_star;

    StepResult step = gs_step(out.x, g, objective, eps, nu, params, &out.f_final);

    TraceRecord rec;
    rec.k = hooks.k0 + iter;
    rec.level = hooks.level;
    rec.f_level = out.f_final.value;
    rec.f_high = hooks.f_is_high ? out.f_final.value
                                 : (hooks.posthoc_high ? hooks.posthoc_high(out.x)
                                                       : std::numeric_limits<double>::quiet_NaN());
    rec.grad_norm = g.norm();
    rec.eps = eps;
    rec.nu = nu;
    rec.step_t = step.info.t;
    rec.ls_evals = step.info.ls_evals;
    rec.descent_cert = g.dot(*anchor) - g.squaredNorm();
    rec.wall_seconds = now_or_zero(hooks);
    if (hooks.feval_snapshot) rec.feval_counts = hooks.feval_snapshot();
    if (hooks.geval_snapshot) rec.geval_counts = hooks.geval_snapshot();
    if (hooks.on_record) hooks.on_record(rec);
    out.trace.records.push_back(std::move(rec));

    if (step.info.branch == 1) {
      out.trace.status = GsStatus::converged;
      return out;
    }
    if (step.info.branch == 3 && step.info.ls_failed) {
      out.trace.status = GsStatus::linesearch_cap;
      return out;
    }
    eps = step.eps;
    nu = step.nu;
    if (step.info.branch == 3) {
      out.x = std::move(step.x);
      out.f_final = std::move(step.info.f_next);
    }
  }
  return out;
}

RunResult stabilize(const Objective& h_objective, const VecX& x0, const GsParams& params,
                    std::mt19937_64& rng, double margin, const RunHooks& hooks) {
  double resolved = margin;
  if (!std::isfinite(resolved)) {
    const ObjectiveEval h0 = h_objective.value(x0);
    resolved = 1e-6 * (1.0 + std::abs(h0.value));
  }
  RunHooks h = hooks;
  h.early_stop = [resolved](const VecX&, const ObjectiveEval& fx) {
    return fx.value <= -resolved && fx.value < 0.0;
  };
  RunResult res = run_gs(h_objective, x0, params, rng, h);
  if (!(res.f_final.value < 0.0))
    throw std::runtime_error("stabilize: stabilization failed, h = " +
                             std::to_string(res.f_final.value) + " after " +
                             std::to_string(res.trace.records.size()) + " iterations");
  return res;
}

}  // namespace mfgs::gs
