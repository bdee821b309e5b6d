#include "mfgs/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mfgs/mmio.hpp"

namespace mfgs::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Method method_from_string(const std::string& s) {
  if (s == "hfgs") return Method::hfgs;
  if (s == "rmfgs") return Method::rmfgs;
  if (s == "amfgs") return Method::amfgs;
  throw std::invalid_argument("config: unknown method '" + s + "' (expected hfgs|rmfgs|amfgs)");
}

gs::GsParams params_from_json(const json& j) {
  gs::GsParams p;
  p.q = j.value("q", 0);
  p.eps0 = j.value("eps0", 0.1);
  p.nu0 = j.value("nu0", 0.1);
  p.eps_opt = j.value("eps_opt", 1e-4);
  p.nu_opt = j.value("nu_opt", 1e-4);
  p.theta_eps = j.value("theta_eps", 0.1);
  p.theta_nu = j.value("theta_nu", 0.1);
  p.beta = j.value("beta", 1e-4);
  p.gamma = j.value("gamma", 0.5);
  p.max_iters = j.value("max_iters", 100);
  p.max_linesearch_halvings = j.value("max_linesearch_halvings", 50);
  return p;
}

json params_to_json(const gs::GsParams& p) {
  return json{{"q", p.q},
              {"eps0", p.eps0},
              {"nu0", p.nu0},
              {"eps_opt", p.eps_opt},
              {"nu_opt", p.nu_opt},
              {"theta_eps", p.theta_eps},
              {"theta_nu", p.theta_nu},
              {"beta", p.beta},
              {"gamma", p.gamma},
              {"max_iters", p.max_iters},
              {"max_linesearch_halvings", p.max_linesearch_halvings}};
}

bench::HeatHierarchySpec heat_from_json(const json& j) {
  bench::HeatHierarchySpec spec;
  if (j.contains("levels")) spec.levels = j["levels"].get<std::vector<long>>();
  spec.num_controls = j.value("num_controls", spec.num_controls);
  spec.num_outputs = j.value("num_outputs", spec.num_outputs);
  spec.diffusivity = j.value("diffusivity", spec.diffusivity);
  spec.mass_matrix = j.value("mass_matrix", spec.mass_matrix);
  spec.window_width = j.value("window_width", spec.window_width);
  const std::string f = j.value("formulation", "lqg");
  if (f == "lqg")
    spec.formulation = bench::Formulation::lqg;
  else if (f == "general")
    spec.formulation = bench::Formulation::general;
  else
    throw std::invalid_argument("config: unknown heat formulation '" + f + "'");
  return spec;
}

lti::ModelHierarchy load_model(const ExperimentConfig& cfg) {
  if (cfg.heat && cfg.manifest)
    throw std::invalid_argument("config: give either a heat spec or a manifest, not both");
  if (cfg.heat) return bench::build_heat_hierarchy(*cfg.heat);
  if (cfg.manifest) return bench::load_hierarchy(*cfg.manifest);
  throw std::invalid_argument("config: missing model source (model.heat or model.manifest)");
}

int resolve_threads(int threads) {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void write_trace_header(std::ostream& out, int L) {
  out << "wall_seconds,level,k,f_level,f_L,grad_norm,eps,nu,step_t";
  for (int i = 1; i <= L; ++i) out << ",n_feval_" << i;
  for (int i = 1; i <= L; ++i) out << ",n_geval_" << i;
  out << "\n";
}

void write_trace_row(std::ostream& out, const gs::TraceRecord& r, int L) {
  out << fmt(r.wall_seconds) << "," << r.level << "," << r.k << "," << fmt(r.f_level) << ","
      << fmt(r.f_high) << "," << fmt(r.grad_norm) << "," << fmt(r.eps) << "," << fmt(r.nu) << ","
      << fmt(r.step_t);
  for (int i = 0; i < L; ++i)
    out << "," << (i < static_cast<int>(r.feval_counts.size()) ? r.feval_counts[static_cast<size_t>(i)] : 0);
  for (int i = 0; i < L; ++i)
    out << "," << (i < static_cast<int>(r.geval_counts.size()) ? r.geval_counts[static_cast<size_t>(i)] : 0);
  out << "\n";
  out.flush();
}

json summary_json(const ExperimentConfig& cfg, const lti::ModelHierarchy& hier,
                  const mf::LevelSchedule& sched, const mf::MfResult& result, long N, int q) {
  json dims = json::array();
  for (int ell = 1; ell <= hier.num_levels(); ++ell) {
    const lti::PlantDims d = hier.level(ell).dims();
    dims.push_back({{"level", ell},
                    {"n", d.n},
                    {"m1", d.m1},
                    {"m2", d.m2},
                    {"p1", d.p1},
                    {"p2", d.p2}});
  }
  json levels = json::array();
  for (const mf::LevelReport& r : result.levels) {
    levels.push_back({{"level", r.level},
                      {"iters", r.iters},
                      {"max_iters", r.max_iters},
                      {"status", gs::to_string(r.status)},
                      {"stab_iters", r.stab_iters},
                      {"f_level_final", r.f_level_final},
                      {"f_L_final", r.f_high_final},
                      {"wall_seconds", r.wall_seconds}});
  }
  json sched_json = json::array();
  for (const gs::GsParams& p : sched.levels) sched_json.push_back(params_to_json(p));
  return json{{"method", to_string(cfg.method)},
              {"seed", cfg.seed},
              {"N", N},
              {"q", q},
              {"L", hier.num_levels()},
              {"nK", cfg.nK},
              {"dk_fixed_zero", cfg.dk_fixed_zero},
              {"norm_tol", cfg.norm_tol},
              {"deterministic_timing", cfg.deterministic_timing},
              {"dims", dims},
              {"schedule", sched_json},
              {"levels", levels},
              {"totals",
               {{"fevals", result.fevals},
                {"gevals", result.gevals},
                {"posthoc_evals", result.posthoc_evals},
                {"wall_seconds", result.wall_seconds}}},
              {"f_L_final", result.f_high_final}};
}

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::hfgs: return "hfgs";
    case Method::rmfgs: return "rmfgs";
    case Method::amfgs: return "amfgs";
  }
  return "unknown";
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("config: bad JSON in '" + path + "': " + e.what());
  }

  ExperimentConfig cfg;
  cfg.method = method_from_string(j.value("method", "hfgs"));
  if (j.contains("model")) {
    const json& m = j["model"];
    if (m.contains("heat")) cfg.heat = heat_from_json(m["heat"]);
    if (m.contains("manifest")) cfg.manifest = m["manifest"].get<std::string>();
  }
  cfg.nK = j.value("nK", cfg.nK);
  cfg.dk_fixed_zero = j.value("dk_fixed_zero", cfg.dk_fixed_zero);
  cfg.q = j.value("q", cfg.q);
  cfg.norm_tol = j.value("norm_tol", cfg.norm_tol);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.out_dir = j.value("out", cfg.out_dir);
  cfg.threads = j.value("threads", cfg.threads);
  cfg.deterministic_timing = j.value("deterministic_timing", cfg.deterministic_timing);
  cfg.posthoc_per_iterate = j.value("posthoc_per_iterate", cfg.posthoc_per_iterate);

  if (j.contains("schedule")) {
    const json& s = j["schedule"];
    if (s.contains("max_iters")) cfg.max_iters = s["max_iters"].get<std::vector<int>>();
    if (s.contains("levels")) {
      mf::LevelSchedule sched;
      for (const json& pj : s["levels"]) sched.levels.push_back(params_from_json(pj));
      cfg.schedule = std::move(sched);
    }
  }
  return cfg;
}

mf::LevelSchedule ExperimentConfig::resolve_schedule(int L, long N) const {
  mf::LevelSchedule sched;
  if (schedule) {
    sched = *schedule;
  } else {
    std::vector<int> iters = max_iters;
    if (iters.empty()) iters.assign(static_cast<size_t>(L), 100);
    if (static_cast<int>(iters.size()) != L)
      throw std::invalid_argument("config: schedule has " + std::to_string(iters.size()) +
                                  " max_iters entries, hierarchy has " + std::to_string(L) +
                                  " levels");
    sched = mf::LevelSchedule::decade_defaults(L, iters, method == Method::amfgs);
  }
  if (q > 0)
    for (gs::GsParams& p : sched.levels) p.q = q;
  sched.validate(L, N);
  return sched;
}

std::vector<TraceRow> read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("trace: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trace: empty file '" + path + "'");
  int L = 0;
  {
    std::istringstream hs(line);
    std::string col;
    while (std::getline(hs, col, ','))
      if (col.rfind("n_feval_", 0) == 0) ++L;
  }
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    std::vector<std::string> toks;
    while (std::getline(ls, tok, ',')) toks.push_back(tok);
    if (static_cast<int>(toks.size()) != 9 + 2 * L)
      throw std::runtime_error("trace: malformed row in '" + path + "'");
    TraceRow r;
    r.wall_seconds = std::strtod(toks[0].c_str(), nullptr);
    r.level = std::stoi(toks[1]);
    r.k = std::stol(toks[2]);
    r.f_level = std::strtod(toks[3].c_str(), nullptr);
    r.f_high = std::strtod(toks[4].c_str(), nullptr);
    r.grad_norm = std::strtod(toks[5].c_str(), nullptr);
    r.eps = std::strtod(toks[6].c_str(), nullptr);
    r.nu = std::strtod(toks[7].c_str(), nullptr);
    r.step_t = std::strtod(toks[8].c_str(), nullptr);
    for (int i = 0; i < L; ++i) r.fevals.push_back(std::stol(toks[static_cast<size_t>(9 + i)]));
    for (int i = 0; i < L; ++i) r.gevals.push_back(std::stol(toks[static_cast<size_t>(9 + L + i)]));
    rows.push_back(std::move(r));
  }
  return rows;
}

int cmd_run(const ExperimentConfig& cfg) {
  try {
    const lti::ModelHierarchy hier = load_model(cfg);
    const int L = hier.num_levels();
    const lti::ControllerLayout layout = hier.layout(cfg.nK, cfg.dk_fixed_zero);
    const long N = layout.size();
    const mf::LevelSchedule sched = cfg.resolve_schedule(L, N);
    const int q = sched.levels.back().resolve_q(N);

    fs::create_directories(cfg.out_dir);
    std::ofstream trace_out(fs::path(cfg.out_dir) / "trace.csv");
    if (!trace_out) throw std::runtime_error("cannot write trace.csv in '" + cfg.out_dir + "'");
    write_trace_header(trace_out, L);

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    VecX x0(N);
    for (long i = 0; i < N; ++i) x0[i] = normal(rng);

    analysis::NormOptions nopts;
    nopts.tol = cfg.norm_tol;
    mf::LevelEvaluator ev(hier, layout, nopts);

    mf::DriverOptions dopts;
    dopts.threads = resolve_threads(cfg.threads);
    dopts.posthoc_per_iterate = cfg.posthoc_per_iterate;
    if (cfg.deterministic_timing) dopts.clock = []() { return 0.0; };
    dopts.on_record = [&trace_out, L](const gs::TraceRecord& r) { write_trace_row(trace_out, r, L); };

    mf::MfResult result;
    switch (cfg.method) {
      case Method::hfgs: result = mf::run_hfgs(ev, x0, sched, rng, dopts); break;
      case Method::rmfgs: result = mf::run_rmfgs(ev, x0, sched, rng, dopts); break;
      case Method::amfgs: result = mf::run_amfgs(ev, x0, sched, rng, dopts); break;
    }
    trace_out.close();

    const lti::Controller& k = result.controller_final;
    mmio::write_matrix((fs::path(cfg.out_dir) / "AK.mtx").string(), k.AK);
    mmio::write_matrix((fs::path(cfg.out_dir) / "BK.mtx").string(), k.BK);
    mmio::write_matrix((fs::path(cfg.out_dir) / "CK.mtx").string(), k.CK);
    mmio::write_matrix((fs::path(cfg.out_dir) / "DK.mtx").string(), k.DK);

    json summary = summary_json(cfg, hier, sched, result, N, q);
    summary["controller_files"] = {{"AK", "AK.mtx"}, {"BK", "BK.mtx"}, {"CK", "CK.mtx"}, {"DK", "DK.mtx"}};
    std::ofstream sum_out(fs::path(cfg.out_dir) / "summary.json");
    sum_out << summary.dump(2) << "\n";

    std::cout << to_string(cfg.method) << " seed " << cfg.seed << ": f_L = "
              << fmt(result.f_high_final) << " after " << fmt(result.wall_seconds) << " s\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "run: error: " << e.what() << "\n";
    return 1;
  }
}

namespace {

struct LoadedRun {
  std::string dir;
  std::string method;
  double f_final = 0.0;
  double wall_total = 0.0;
  long top_gevals = 0;
  int L = 0;
  std::vector<TraceRow> rows;  // rows with known f_L, ordered by time
  json summary;
};

LoadedRun load_run(const std::string& dir) {
  LoadedRun run;
  run.dir = dir;
  std::ifstream in(fs::path(dir) / "summary.json");
  if (!in) throw std::runtime_error("compare: cannot open summary.json in '" + dir + "'");
  in >> run.summary;
  run.method = run.summary.value("method", "?");
  run.f_final = run.summary.value("f_L_final", std::numeric_limits<double>::quiet_NaN());
  run.L = run.summary.value("L", 0);
  run.wall_total = run.summary["totals"].value("wall_seconds", 0.0);
  if (run.summary["totals"].contains("gevals") && run.L > 0)
    run.top_gevals = run.summary["totals"]["gevals"][static_cast<size_t>(run.L - 1)].get<long>();

  std::vector<TraceRow> all = read_trace_csv((fs::path(dir) / "trace.csv").string());
  // keep rows with a known f_L; append level-final a posteriori values
  for (const TraceRow& r : all)
    if (std::isfinite(r.f_high)) run.rows.push_back(r);
  if (run.summary.contains("levels")) {
    for (const json& lv : run.summary["levels"]) {
      const double fl = lv.value("f_L_final", std::numeric_limits<double>::quiet_NaN());
      if (!std::isfinite(fl) || lv.value("level", 0) == run.L) continue;
      TraceRow r{};
      r.wall_seconds = lv.value("wall_seconds", 0.0);
      r.level = lv.value("level", 0);
      r.k = -1;
      r.f_level = std::numeric_limits<double>::quiet_NaN();
      r.f_high = fl;
      // counters at the end of that level, from the last trace row of the level
      for (const TraceRow& t : all)
        if (t.level == r.level) {
          r.fevals = t.fevals;
          r.gevals = t.gevals;
        }
      run.rows.push_back(r);
    }
  }
  std::stable_sort(run.rows.begin(), run.rows.end(),
                   [](const TraceRow& a, const TraceRow& b) {
                     return std::make_pair(a.wall_seconds, a.k) < std::make_pair(b.wall_seconds, b.k);
                   });
  return run;
}

}  // namespace

int cmd_compare(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
  try {
    if (run_dirs.empty()) throw std::invalid_argument("compare: needs at least one run directory");
    std::vector<LoadedRun> runs;
    for (const std::string& d : run_dirs) runs.push_back(load_run(d));
    for (size_t i = 1; i < runs.size(); ++i)
      if (runs[i].L != runs[0].L)
        throw std::runtime_error("compare: runs '" + runs[0].dir + "' and '" + runs[i].dir +
                                 "' come from incompatible hierarchies (L differs)");

    // deterministic ordering regardless of argument order
    std::stable_sort(runs.begin(), runs.end(), [](const LoadedRun& a, const LoadedRun& b) {
      return std::make_pair(a.method, a.dir) < std::make_pair(b.method, b.dir);
    });

    double f_min = std::numeric_limits<double>::infinity();
    for (const LoadedRun& r : runs) f_min = std::min(f_min, r.f_final);

    fs::create_directories(out_dir);
    std::ofstream csv(fs::path(out_dir) / "compare.csv");
    csv << "method,run,level,k,wall_seconds,f_L,rel_err\n";
    for (const LoadedRun& r : runs)
      for (const TraceRow& row : r.rows)
        csv << r.method << "," << r.dir << "," << row.level << "," << row.k << ","
            << fmt(row.wall_seconds) << "," << fmt(row.f_high) << ","
            << fmt((row.f_high - f_min) / f_min) << "\n";

    // speedups relative to the HFGS terminal value
    const LoadedRun* hfgs = nullptr;
    for (const LoadedRun& r : runs)
      if (r.method == "hfgs") hfgs = &r;

    json out;
    out["f_min"] = f_min;
    out["runs"] = json::array();
    for (const LoadedRun& r : runs) {
      json jr{{"dir", r.dir},
              {"method", r.method},
              {"f_L_final", r.f_final},
              {"wall_seconds", r.wall_total},
              {"top_level_gevals", r.top_gevals}};
      if (hfgs) {
        const double target = hfgs->f_final;
        double t_reach = std::numeric_limits<double>::quiet_NaN();
        long gev_reach = -1;
        for (const TraceRow& row : r.rows) {
          if (row.f_high <= target * (1.0 + 1e-12)) {
            t_reach = row.wall_seconds;
            gev_reach = row.gevals.empty() ? 0 : row.gevals.back();
            break;
          }
        }
        jr["reached_hfgs_terminal"] = std::isfinite(t_reach);
        if (std::isfinite(t_reach)) {
          jr["time_to_reach_hfgs"] = t_reach;
          jr["top_gevals_to_reach_hfgs"] = gev_reach;
          if (t_reach > 0.0) jr["speedup_wall"] = hfgs->wall_total / t_reach;
          if (gev_reach > 0) jr["speedup_top_gevals"] =
              static_cast<double>(hfgs->top_gevals) / static_cast<double>(gev_reach);
        }
      }
      out["runs"].push_back(jr);
    }
    std::ofstream jout(fs::path(out_dir) / "compare.json");
    jout << out.dump(2) << "\n";
    std::cout << "compare: f_min = " << fmt(f_min) << " over " << runs.size() << " runs\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "compare: error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_validate(const std::string& config_or_manifest_path) {
  try {
    lti::ModelHierarchy hier = [&]() {
      std::ifstream probe(config_or_manifest_path);
      if (!probe) throw std::invalid_argument("validate: cannot open '" + config_or_manifest_path + "'");
      json j;
      probe >> j;
      if (j.contains("formulation") && j.contains("levels"))
        return bench::load_hierarchy(config_or_manifest_path);
      return load_model(ExperimentConfig::from_json_file(config_or_manifest_path));
    }();
    std::printf("%5s %7s %5s %5s %5s %5s\n", "level", "n", "m1", "m2", "p1", "p2");
    for (int ell = 1; ell <= hier.num_levels(); ++ell) {
      const lti::PlantDims d = hier.level(ell).dims();
      std::printf("%5d %7ld %5ld %5ld %5ld %5ld\n", ell, d.n, d.m1, d.m2, d.p1, d.p2);
    }
    std::cout << "OK: " << hier.num_levels()
              << " level(s); shared external dims, regular pencils, D22 == 0\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "validate: error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_generate(const ExperimentConfig& cfg, const std::string& out_dir) {
  try {
    if (!cfg.heat) throw std::invalid_argument("generate: config has no model.heat spec");
    const lti::ModelHierarchy hier = bench::build_heat_hierarchy(*cfg.heat);
    bench::save_hierarchy(hier, out_dir);
    std::cout << "generate: wrote " << hier.num_levels() << " levels to " << out_dir << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "generate: error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace mfgs::cli
