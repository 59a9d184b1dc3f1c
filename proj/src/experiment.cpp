#include "repctl/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "json_reader.hpp"
#include "repctl/closed_form.hpp"
#include "repctl/csv.hpp"
#include "repctl/problem_json.hpp"

#ifndef REPCTL_VERSION
#define REPCTL_VERSION "0.0.0"
#endif

namespace repctl {

namespace {

using nlohmann::json;
using detail::join;
using detail::Reader;
namespace fs = std::filesystem;

constexpr std::uint64_t kMaxPaths = 100'000'000;
constexpr std::uint64_t kMaxNodes = 1'000'000;
constexpr std::uint64_t kMaxRows = 10'000'000;

const json* section(const json& doc, const char* key) {
  auto it = doc.find(key);
  return it == doc.end() ? nullptr : &*it;
}

// Reads "grid" (or fills it entirely from defaults when absent).
std::optional<SpatialGrid> read_grid(Reader& r, const json* doc, const ControlProblem& problem,
                                     SolverOptions& solver) {
  const SpatialGrid base = default_grid(problem);
  const json empty = json::object();
  const json& g = doc ? *doc : empty;
  if (!r.object(g, "grid", {"kind", "R_min", "R_max", "n_space", "n_time", "auto_raise",
                            "cfl_target"}))
    return std::nullopt;
  const auto kind = r.choice(g, "grid", "kind", {"LogUniform", "Uniform"}, to_string(base.kind));
  const auto R_min = r.number(g, "grid", "R_min", base.R_min);
  const auto R_max = r.number(g, "grid", "R_max", base.R_max);
  const auto n_space = r.count(g, "grid", "n_space", 401, kMaxNodes);
  const auto n_time = r.count(g, "grid", "n_time", 1, kMaxNodes);
  const auto auto_raise = r.boolean(g, "grid", "auto_raise", true);
  const auto cfl = r.number(g, "grid", "cfl_target", 0.9);
  if (!kind || !R_min || !R_max || !n_space || !n_time || !auto_raise || !cfl) return std::nullopt;

  SpatialGrid grid;
  grid.kind = *kind == "LogUniform" ? GridKind::LogUniform : GridKind::Uniform;
  grid.R_min = *R_min;
  grid.R_max = *R_max;
  grid.n_space = static_cast<Eigen::Index>(*n_space);
  grid.n_time = static_cast<Eigen::Index>(*n_time);
  grid.T = problem.horizon();
  solver.auto_raise_steps = *auto_raise;
  solver.cfl_target = *cfl;
  return grid;
}

json grid_json(const SpatialGrid& grid, const SolverOptions& solver) {
  return {{"kind", to_string(grid.kind)},
          {"R_min", grid.R_min},
          {"R_max", grid.R_max},
          {"n_space", grid.n_space},
          {"n_time", grid.n_time},
          {"auto_raise", solver.auto_raise_steps},
          {"cfl_target", solver.cfl_target}};
}

void check_times(Reader& r, const std::string& field, const std::vector<double>& times, double lo,
                 double hi) {
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] >= lo && times[k] <= hi)) {
      r.fail(field, "switch times must lie in [" + csv::format(lo) + ", " + csv::format(hi) + "]");
      return;
    }
  }
}

struct Reading {
  Reader& r;
  const json& doc;
  Task task;
  const ControlProblem& problem;
  ExperimentConfig& cfg;
  json& out;

  // Grid for solver tasks and HJB-derived policies, with solver input checks.
  bool solver_grid(bool required) {
    const json* g = section(doc, "grid");
    if (required && !g) {
      r.fail("grid", "missing required section for task " + to_string(task));
      return false;
    }
    const std::size_t before = r.error_count();
    cfg.grid = read_grid(r, g, problem, cfg.solver);
    if (!cfg.grid) return false;
    for (auto& e : check_solver_inputs(problem, *cfg.grid, cfg.solver)) r.fail(e.field, e.message);
    if (r.error_count() != before) return false;
    out["grid"] = grid_json(*cfg.grid, cfg.solver);
    return true;
  }

  void policy(const json* p, MonteCarloSpec& spec, json& mc_out) {
    const std::string path = "mc.policy";
    const json empty = json::object();
    const json& d = p ? *p : empty;
    if (!r.object(d, path, {"kind", "mu", "switch_times", "initial_sign"})) return;
    const auto kind = r.choice(d, path, "kind", {"optimal", "constant", "pulsing"},
                               std::string("optimal"));
    if (!kind) return;
    const double eps = problem.epsilon();
    json pol = {{"kind", *kind}};
    if (*kind == "constant") {
      spec.policy.kind = PolicyKind::Constant;
      const auto mu = r.number(d, path, "mu", std::nullopt);
      if (!mu) return;
      if (!(std::abs(*mu) <= eps)) r.fail(join(path, "mu"), "must lie in [-epsilon, epsilon]");
      spec.policy.mu = *mu;
      pol["mu"] = *mu;
    } else if (*kind == "pulsing") {
      spec.policy.kind = PolicyKind::Pulsing;
      const auto times = r.numbers(d, path, "switch_times");
      const auto sign = r.number(d, path, "initial_sign", 1.0);
      if (sign && *sign != 1.0 && *sign != -1.0)
        r.fail(join(path, "initial_sign"), "must be 1 or -1");
      if (!times || !sign) return;
      check_times(r, join(path, "switch_times"), *times, 0.0, problem.horizon());
      for (std::size_t k = 1; k < times->size(); ++k)
        if (!((*times)[k] > (*times)[k - 1])) {
          r.fail(join(path, "switch_times"), "must be strictly ascending");
          break;
        }
      spec.policy.pulsing = {eps, *times, static_cast<int>(*sign)};
      pol["switch_times"] = *times;
      pol["initial_sign"] = static_cast<int>(*sign);
    } else {
      spec.policy.kind = PolicyKind::Optimal;
      if (problem.regime() != AnalyticRegime::PowerLawGbm && solver_grid(false)) {
        const auto& g = *cfg.grid;
        if (!(spec.R0 >= g.R_min && spec.R0 <= g.R_max))
          r.fail("mc.R0", "must lie inside the grid range for the optimal feedback policy");
      }
    }
    mc_out["policy"] = pol;
  }

  void mc() {
    const json* m = section(doc, "mc");
    const json empty = json::object();
    const json& d = m ? *m : empty;
    if (!r.object(d, "mc", {"n_paths", "dt", "seed", "R0", "t0", "policy"})) return;
    const double T = problem.horizon();
    const auto t0 = r.number(d, "mc", "t0", 0.0);
    const auto R0 = r.number(d, "mc", "R0", 1.0);
    const auto n_paths = r.count(d, "mc", "n_paths", 100000, kMaxPaths);
    const auto seed = r.count(d, "mc", "seed", 0);
    std::optional<double> dt;
    if (t0) {
      if (!(*t0 >= 0.0 && *t0 < T)) r.fail("mc.t0", "must lie in [0, horizon)");
      dt = r.number(d, "mc", "dt", 1e-3 * (T - *t0));
      if (dt && !(*dt > 0.0 && std::isfinite(*dt))) r.fail("mc.dt", "must be > 0");
    }
    if (n_paths && *n_paths < 2) r.fail("mc.n_paths", "must be >= 2");
    if (R0) {
      if (problem.dynamics().kind == DynamicsKind::GBM && !(*R0 > 0.0 && std::isfinite(*R0)))
        r.fail("mc.R0", "must be > 0 under GBM dynamics");
      if (problem.dynamics().kind == DynamicsKind::NerloveArrow &&
          !(*R0 >= 0.0 && std::isfinite(*R0)))
        r.fail("mc.R0", "must be >= 0");
    }
    if (!t0 || !R0 || !n_paths || !seed || !dt) return;

    MonteCarloSpec spec;
    spec.options = {static_cast<std::size_t>(*n_paths), *dt, *seed};
    spec.R0 = *R0;
    spec.t0 = *t0;
    json mc_out = {{"n_paths", *n_paths}, {"dt", *dt}, {"seed", *seed}, {"R0", *R0}, {"t0", *t0}};
    if (task != Task::SweepSwitch) policy(section(d, "policy"), spec, mc_out);
    cfg.mc = spec;
    out["mc"] = mc_out;
  }

  void sweep() {
    const json* s = section(doc, "sweep");
    const json empty = json::object();
    const json& d = s ? *s : empty;
    if (!r.object(d, "sweep", {"mode", "n_points", "switch_times"})) return;
    const bool analytic_ok = problem.regime() == AnalyticRegime::PowerLawGbm;
    const auto mode = r.choice(d, "sweep", "mode", {"analytic", "mc"},
                               std::string(analytic_ok ? "analytic" : "mc"));
    if (mode && *mode == "analytic" && !analytic_ok)
      r.fail("sweep.mode", "analytic mode needs the power-law GBM regime");
    SweepSpec spec;
    spec.mode = (mode && *mode == "analytic") ? SweepMode::Analytic : SweepMode::MonteCarlo;
    json sw = {{"mode", to_string(spec.mode)}};
    if (d.contains("switch_times")) {
      if (d.contains("n_points")) r.fail("sweep.n_points", "give either n_points or switch_times");
      const auto times = r.numbers(d, "sweep", "switch_times");
      if (times) {
        if (times->empty()) r.fail("sweep.switch_times", "must not be empty");
        check_times(r, "sweep.switch_times", *times, 0.0, problem.horizon());
        spec.switch_times = *times;
        sw["switch_times"] = *times;
      }
    } else {
      const auto n = r.count(d, "sweep", "n_points", 1000, kMaxRows);
      if (n && *n < 2) r.fail("sweep.n_points", "must be >= 2");
      if (n) {
        spec.n_points = static_cast<std::size_t>(*n);
        sw["n_points"] = *n;
      }
    }
    cfg.sweep = spec;
    out["sweep"] = sw;
  }

  void closed_form() {
    if (problem.regime() != AnalyticRegime::PowerLawGbm)
      r.fail("problem", "closed-form task needs GBM dynamics, a PowerLaw price and the Linear "
                        "processing rate");
    const json* c = section(doc, "closed_form");
    const json empty = json::object();
    const json& d = c ? *c : empty;
    if (!r.object(d, "closed_form", {"n_steps", "dt"})) return;
    const double T = problem.horizon();
    const auto n = r.count(d, "closed_form", "n_steps", 1000, kMaxRows);
    const auto dt = r.number(d, "closed_form", "dt", 1e-4 * T);
    if (n && *n < 1) r.fail("closed_form.n_steps", "must be >= 1");
    if (dt && !(*dt > 0.0 && *dt <= T)) r.fail("closed_form.dt", "must lie in (0, horizon]");
    if (!n || !dt) return;
    cfg.psi_rows = static_cast<std::size_t>(*n);
    cfg.psi_dt = *dt;
    out["closed_form"] = {{"n_steps", *n}, {"dt", *dt}};
  }

  void convergence() {
    const json* c = section(doc, "convergence");
    const json empty = json::object();
    const json& d = c ? *c : empty;
    if (!r.object(d, "convergence", {"levels", "window"})) return;
    const auto levels = r.count(d, "convergence", "levels", 3, 64);
    if (levels && (*levels < 2 || *levels > 6)) r.fail("convergence.levels", "must lie in [2, 6]");
    std::optional<std::pair<double, double>> window;
    if (d.contains("window")) {
      const auto w = r.numbers(d, "convergence", "window");
      if (w && (w->size() != 2 || !((*w)[0] < (*w)[1])))
        r.fail("convergence.window", "expected [lo, hi] with lo < hi");
      else if (w)
        window = std::make_pair((*w)[0], (*w)[1]);
    }
    if (!levels || !cfg.grid) return;
    cfg.levels = static_cast<int>(*levels);
    cfg.window = window ? *window : default_window(*cfg.grid);
    out["convergence"] = {{"levels", *levels}, {"window", {cfg.window.first, cfg.window.second}}};
  }
};

template <typename Write>
fs::path write_file(const fs::path& dir, const char* name, Write&& write) {
  const fs::path file = dir / name;
  std::ofstream os(file, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + file.string() + " for writing");
  write(os);
  if (!os) throw std::runtime_error("failed writing " + file.string());
  return file;
}

ControlPolicy build_policy(const ExperimentConfig& cfg) {
  const auto& spec = cfg.mc->policy;
  switch (spec.kind) {
    case PolicyKind::Constant:
      return ConstantPolicy{spec.mu};
    case PolicyKind::Pulsing:
      return spec.pulsing;
    case PolicyKind::Optimal:
      break;
  }
  if (cfg.problem.regime() == AnalyticRegime::PowerLawGbm)
    return optimal_pulsing_policy(power_law_psi(cfg.problem, 1e-4 * cfg.problem.horizon()));
  return extract_policy(solve_hjb(cfg.problem, *cfg.grid, cfg.solver));
}

void execute(const ExperimentConfig& cfg, const fs::path& dir, std::vector<fs::path>& files,
             std::ostream* log) {
  const auto started = std::chrono::steady_clock::now();
  auto note = [&](const std::string& what) {
    if (!log) return;
    const double s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.2f", s);
    *log << to_string(cfg.task) << ": " << what << " (" << secs << " s)\n";
  };
  const ControlProblem& p = cfg.problem;

  switch (cfg.task) {
    case Task::ClosedForm: {
      const PsiSolution psi = power_law_psi(p, cfg.psi_dt);
      files.push_back(write_file(dir, "psi.csv", [&](std::ostream& os) {
        write_csv(os, psi, static_cast<Eigen::Index>(cfg.psi_rows));
      }));
      files.push_back(write_file(dir, "policy.csv", [&](std::ostream& os) {
        write_csv(os, optimal_pulsing_policy(psi));
      }));
      note("psi(0) = " + csv::format(psi(0.0)));
      break;
    }
    case Task::SolveHjb: {
      const ValueGrid vg = solve_hjb(p, *cfg.grid, cfg.solver);
      files.push_back(write_file(dir, "value.csv", [&](std::ostream& os) { write_csv(os, vg); }));
      files.push_back(write_file(dir, "value.json", [&](std::ostream& os) {
        os << summary_json(vg).dump(2) << '\n';
      }));
      note(std::to_string(vg.grid.n_space) + " x " + std::to_string(vg.grid.n_time) + " grid");
      break;
    }
    case Task::Simulate: {
      const auto& mc = *cfg.mc;
      const Path path = simulate_path(p.dynamics(), build_policy(cfg), mc.R0, mc.t0, p.horizon(),
                                      mc.options.dt, path_seed(mc.options.seed, 0));
      files.push_back(write_file(dir, "path.csv", [&](std::ostream& os) { write_csv(os, path); }));
      note(std::to_string(path.times.size()) + " stamps");
      break;
    }
    case Task::Evaluate: {
      const auto& mc = *cfg.mc;
      const MCEstimate est = evaluate_policy_mc(p, build_policy(cfg), mc.R0, mc.t0, mc.options);
      files.push_back(write_file(dir, "evaluate.json", [&](std::ostream& os) {
        os << to_json(est).dump(2) << '\n';
      }));
      note("mean " + csv::format(est.mean) + " +/- " + csv::format(est.std_error));
      break;
    }
    case Task::SweepSwitch: {
      const auto& mc = *cfg.mc;
      const auto& sw = *cfg.sweep;
      const auto times =
          sw.n_points ? uniform_switch_grid(mc.t0, p.horizon(), *sw.n_points) : sw.switch_times;
      const SweepResult result = sweep_switch_time(p, mc.R0, mc.t0, times, sw.mode, mc.options);
      files.push_back(write_file(dir, "sweep.csv", [&](std::ostream& os) { write_csv(os, result); }));
      const auto& best = result.points[result.argmax()];
      files.push_back(write_file(dir, "sweep.json", [&](std::ostream& os) {
        const json j = {{"mode", to_string(sw.mode)},
                        {"n_points", result.points.size()},
                        {"argmax", {{"t_switch", best.t_switch},
                                    {"value", best.value},
                                    {"std_error", best.std_error}}}};
        os << j.dump(2) << '\n';
      }));
      note("argmax at t_switch = " + csv::format(best.t_switch));
      break;
    }
    case Task::Convergence: {
      const ConvergenceReport report =
          refine_and_compare(p, *cfg.grid, cfg.levels, cfg.window, cfg.solver);
      files.push_back(write_file(dir, "convergence.csv", [&](std::ostream& os) {
        csv::header(os, {"level", "n_space", "n_time", "dx", "dt", "error"});
        for (std::size_t k = 0; k < report.levels.size(); ++k) {
          const auto& l = report.levels[k];
          csv::row(os, {static_cast<double>(k), static_cast<double>(l.n_space),
                        static_cast<double>(l.n_time), l.dx, l.dt, l.error});
        }
      }));
      files.push_back(write_file(dir, "convergence.json", [&](std::ostream& os) {
        os << to_json(report).dump(2) << '\n';
      }));
      note(report.monotone() ? "errors shrink monotonically" : "errors do not shrink monotonically");
      break;
    }
  }
}

}  // namespace

const char* toolkit_version() { return REPCTL_VERSION; }

std::string to_string(Task task) {
  switch (task) {
    case Task::ClosedForm: return "closed-form";
    case Task::SolveHjb: return "solve-hjb";
    case Task::Simulate: return "simulate";
    case Task::Evaluate: return "evaluate";
    case Task::SweepSwitch: return "sweep-switch";
    case Task::Convergence: return "convergence";
  }
  return "unknown";
}

std::optional<Task> task_from_string(const std::string& name) {
  for (Task t : {Task::ClosedForm, Task::SolveHjb, Task::Simulate, Task::Evaluate,
                 Task::SweepSwitch, Task::Convergence})
    if (to_string(t) == name) return t;
  return std::nullopt;
}

Resolution resolve_config(const json& doc) {
  Resolution res;
  Reader r(res.errors);
  if (!r.object(doc, "",
                {"schema_version", "toolkit_version", "task", "problem", "grid", "mc", "sweep",
                 "closed_form", "convergence", "output"},
                "config"))
    return res;

  if (auto v = r.count(doc, "", "schema_version", std::nullopt); v && *v != kSchemaVersion)
    r.fail("schema_version", "unsupported version " + std::to_string(*v) + " (expected " +
                                 std::to_string(kSchemaVersion) + ")");
  if (doc.contains("toolkit_version") && !doc["toolkit_version"].is_string())
    r.fail("toolkit_version", "expected a string");

  std::optional<Task> task;
  if (auto name = r.choice(doc, "", "task",
                           {"closed-form", "solve-hjb", "simulate", "evaluate", "sweep-switch",
                            "convergence"}))
    task = task_from_string(*name);

  std::string output = "out";
  if (auto it = doc.find("output"); it != doc.end()) {
    if (it->is_string() && !it->get<std::string>().empty())
      output = it->get<std::string>();
    else
      r.fail("output", "expected a non-empty directory path");
  }

  std::optional<ControlProblem> problem;
  if (const json* p = section(doc, "problem")) {
    auto errors = check_problem_json(*p, "problem");
    if (errors.empty())
      problem = problem_from_json(*p);
    else
      for (auto& e : errors) r.fail(e.field, e.message);
  } else {
    r.fail("problem", "missing required section");
  }
  if (!task || !problem) return res;

  ExperimentConfig cfg{*task, *problem, std::nullopt, {}, std::nullopt, std::nullopt};
  cfg.output = output;
  json out = {{"schema_version", kSchemaVersion},
              {"task", to_string(*task)},
              {"problem", to_json(*problem)},
              {"output", output}};
  Reading rd{r, doc, *task, *problem, cfg, out};

  switch (*task) {
    case Task::ClosedForm:
      rd.closed_form();
      break;
    case Task::SolveHjb:
      rd.solver_grid(true);
      break;
    case Task::Convergence:
      if (rd.solver_grid(true)) rd.convergence();
      break;
    case Task::Simulate:
    case Task::Evaluate:
      rd.mc();
      break;
    case Task::SweepSwitch:
      rd.mc();
      rd.sweep();
      break;
  }

  if (res.errors.empty()) {
    res.config = std::move(cfg);
    res.resolved = std::move(out);
  }
  return res;
}

std::vector<FieldError> validate(const json& doc) { return resolve_config(doc).errors; }

json manifest(const Resolution& resolution) {
  json m = resolution.resolved;
  m["toolkit_version"] = toolkit_version();
  return m;
}

json apply_overrides(json doc, const RunOptions& options) {
  if (!doc.is_object()) return doc;
  if (options.task) doc["task"] = to_string(*options.task);
  if (options.out) doc["output"] = options.out->generic_string();
  if (options.seed) {
    if (!doc.contains("mc")) doc["mc"] = json::object();
    if (doc["mc"].is_object()) doc["mc"]["seed"] = *options.seed;
  }
  return doc;
}

RunOutcome run(const json& doc, const RunOptions& options) {
  RunOutcome outcome;
  const Resolution res = resolve_config(apply_overrides(doc, options));
  if (!res.errors.empty()) {
    outcome.status = kExitInvalid;
    outcome.errors = res.errors;
    outcome.message = "invalid configuration";
    return outcome;
  }
  const ExperimentConfig& cfg = *res.config;
  const fs::path dir = cfg.output;
  try {
    fs::create_directories(dir);
    outcome.files.push_back(write_file(dir, "manifest.json", [&](std::ostream& os) {
      os << manifest(res).dump(2) << '\n';
    }));
    execute(cfg, dir, outcome.files, options.log);
  } catch (const ValidationError& e) {
    outcome.status = kExitInvalid;
    outcome.errors = e.errors();
    outcome.message = e.what();
  } catch (const CflError& e) {
    outcome.status = kExitInvalid;
    outcome.errors = {{"grid.n_time", e.what()}};
    outcome.message = e.what();
  } catch (const DivergenceError& e) {
    outcome.status = kExitDiverged;
    outcome.message = e.what();
  } catch (const IntegrationError& e) {
    outcome.status = kExitDiverged;
    outcome.message = e.what();
  } catch (const std::exception& e) {
    outcome.status = kExitFailure;
    outcome.message = e.what();
  }
  return outcome;
}

json to_json(const std::vector<FieldError>& errors) {
  json list = json::array();
  for (const auto& e : errors) list.push_back({{"field", e.field}, {"message", e.message}});
  return list;
}

json to_json(const MCEstimate& estimate) {
  return {{"mean", estimate.mean},         {"std_error", estimate.std_error},
          {"n_paths", estimate.n_paths},   {"seed", estimate.seed},
          {"dt", estimate.dt},             {"rho", estimate.rho}};
}

json to_json(const ConvergenceReport& report) {
  json levels = json::array();
  for (const auto& l : report.levels)
    levels.push_back({{"n_space", l.n_space},
                      {"n_time", l.n_time},
                      {"dx", l.dx},
                      {"dt", l.dt},
                      {"error", std::isfinite(l.error) ? json(l.error) : json(nullptr)}});
  return {{"analytic", report.analytic},
          {"window", {report.window_lo, report.window_hi}},
          {"levels", levels},
          {"orders", report.orders},
          {"monotone", report.monotone()}};
}

json summary_json(const ValueGrid& vg) {
  json j = {{"grid",
             {{"kind", to_string(vg.grid.kind)},
              {"R_min", vg.grid.R_min},
              {"R_max", vg.grid.R_max},
              {"n_space", vg.grid.n_space},
              {"n_time", vg.grid.n_time},
              {"T", vg.grid.T}}},
            {"diagnostics",
             {{"n_time_requested", vg.diagnostics.n_time_requested},
              {"n_time_used", vg.diagnostics.n_time_used},
              {"dt", vg.diagnostics.dt},
              {"cfl_ratio", vg.diagnostics.cfl_ratio}}}};
  if (vg.problem.regime() == AnalyticRegime::PowerLawGbm) {
    const auto [lo, hi] = default_window(vg.grid);
    const auto ts = inferred_switch_time(vg, lo, hi);
    j["inferred_switch_time"] = ts ? json(*ts) : json(nullptr);
  }
  return j;
}

}  // namespace repctl
