#ifndef REPCTL_EXPERIMENT_HPP
#define REPCTL_EXPERIMENT_HPP

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "repctl/hjb_solver.hpp"
#include "repctl/model_zoo.hpp"
#include "repctl/policy.hpp"
#include "repctl/simulate.hpp"

namespace repctl {

inline constexpr int kSchemaVersion = 1;

/// Version string stamped into every manifest.
const char* toolkit_version();

enum class Task { ClosedForm, SolveHjb, Simulate, Evaluate, SweepSwitch, Convergence };

std::string to_string(Task task);
std::optional<Task> task_from_string(const std::string& name);

enum class PolicyKind { Optimal, Constant, Pulsing };

struct PolicySpec {
  PolicyKind kind = PolicyKind::Optimal;
  double mu = 0.0;
  PulsingPolicy pulsing;
};

struct MonteCarloSpec {
  MCOptions options;
  double R0 = 1.0;
  double t0 = 0.0;
  PolicySpec policy;
};

struct SweepSpec {
  SweepMode mode = SweepMode::Analytic;
  /// Either n_points uniform times on [t0, T] or an explicit list.
  std::optional<std::size_t> n_points;
  std::vector<double> switch_times;
};

/// A validated experiment with every default filled in.
struct ExperimentConfig {
  Task task;
  ControlProblem problem;
  std::optional<SpatialGrid> grid;
  SolverOptions solver;
  std::optional<MonteCarloSpec> mc;
  std::optional<SweepSpec> sweep;
  std::size_t psi_rows = 1000;
  double psi_dt = 1e-4;
  int levels = 3;
  std::pair<double, double> window{0.0, 0.0};
  std::string output = "out";
};

/// Result of reading a config document. `resolved` is the canonical document
/// (defaults materialized, only the sections the task uses) and is empty
/// whenever `errors` is not.
struct Resolution {
  std::optional<ExperimentConfig> config;
  nlohmann::json resolved;
  std::vector<FieldError> errors;
};

// Config document:
//
//   { "schema_version": 1,
//     "task": "closed-form" | "solve-hjb" | "simulate" | "evaluate"
//             | "sweep-switch" | "convergence",
//     "problem": { ... },
//     "grid": { "kind", "R_min", "R_max", "n_space", "n_time", "auto_raise",
//               "cfl_target" },
//     "mc": { "n_paths", "dt", "seed", "R0", "t0",
//             "policy": { "kind": "optimal" | "constant" | "pulsing",
//                         "mu", "switch_times", "initial_sign" } },
//     "sweep": { "mode": "analytic" | "mc", "n_points" | "switch_times" },
//     "closed_form": { "n_steps", "dt" },
//     "convergence": { "levels", "window": [lo, hi] },
//     "output": "dir" }
//
// A manifest may also carry "toolkit_version", which is accepted and ignored.
Resolution resolve_config(const nlohmann::json& doc);

/// Every reason run() would refuse the document; empty when it would not.
std::vector<FieldError> validate(const nlohmann::json& doc);

/// The resolved document plus the toolkit version.
nlohmann::json manifest(const Resolution& resolution);

struct RunOptions {
  /// Replaces the document's task.
  std::optional<Task> task;
  /// Replaces "output".
  std::optional<std::filesystem::path> out;
  /// Replaces mc.seed.
  std::optional<std::uint64_t> seed;
  /// Progress lines; nullptr for silence.
  std::ostream* log = nullptr;
};

/// The document after the overrides in `options`.
nlohmann::json apply_overrides(nlohmann::json doc, const RunOptions& options);

enum ExitStatus : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitInvalid = 2,
  kExitDiverged = 3,
};

struct RunOutcome {
  int status = kExitOk;
  std::vector<std::filesystem::path> files;
  std::vector<FieldError> errors;
  std::string message;
};

/// Validates, executes the task and writes its artifacts plus manifest.json
/// into the output directory.
RunOutcome run(const nlohmann::json& doc, const RunOptions& options = {});

nlohmann::json to_json(const std::vector<FieldError>& errors);
nlohmann::json to_json(const MCEstimate& estimate);
nlohmann::json to_json(const ConvergenceReport& report);

/// Diagnostics and grid of a solve; no timings, so reruns are byte-identical.
nlohmann::json summary_json(const ValueGrid& vg);

}  // namespace repctl

#endif  // REPCTL_EXPERIMENT_HPP
