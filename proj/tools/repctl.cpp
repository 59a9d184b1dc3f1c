#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "repctl/experiment.hpp"

namespace {

using nlohmann::json;

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Flags& flags, bool run_flags) {
  cmd->add_option("--config", flags.config, "Experiment config (JSON)")->required();
  cmd->add_option("--out", flags.out, "Output directory (overrides \"output\")");
  cmd->add_option("--seed", flags.seed, "Base seed (overrides mc.seed)");
  if (run_flags) cmd->add_flag("--quiet", flags.quiet, "Only report errors");
}

// Reads the config; on failure prints the error list and returns nullopt.
std::optional<json> load(const std::string& file) {
  std::ifstream in(file);
  std::string message;
  if (!in) {
    message = "cannot read " + file;
  } else {
    try {
      return json::parse(in);
    } catch (const json::parse_error& e) {
      message = e.what();
    }
  }
  const json report = {{"errors", json::array({{{"field", "config"}, {"message", message}}})}};
  std::cout << report.dump(2) << '\n';
  return std::nullopt;
}

repctl::RunOptions options_from(const Flags& flags) {
  repctl::RunOptions opts;
  if (!flags.out.empty()) opts.out = flags.out;
  opts.seed = flags.seed;
  return opts;
}

int run_task(repctl::Task task, const Flags& flags) {
  const auto doc = load(flags.config);
  if (!doc) return repctl::kExitInvalid;
  auto opts = options_from(flags);
  opts.task = task;
  if (!flags.quiet) opts.log = &std::cerr;
  const auto outcome = repctl::run(*doc, opts);
  if (outcome.status == repctl::kExitInvalid) {
    std::cout << json{{"errors", repctl::to_json(outcome.errors)}}.dump(2) << '\n';
  } else if (outcome.status != repctl::kExitOk) {
    std::cerr << "repctl: " << outcome.message << '\n';
  } else if (!flags.quiet) {
    for (const auto& f : outcome.files) std::cout << f.string() << '\n';
  }
  return outcome.status;
}

int run_validate(const Flags& flags) {
  const auto doc = load(flags.config);
  if (!doc) return repctl::kExitInvalid;
  const auto errors = repctl::validate(repctl::apply_overrides(*doc, options_from(flags)));
  std::cout << json{{"valid", errors.empty()}, {"errors", repctl::to_json(errors)}}.dump(2)
            << '\n';
  return errors.empty() ? repctl::kExitOk : repctl::kExitInvalid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reputation control toolkit: closed forms, HJB solves and Monte-Carlo checks"};
  app.set_version_flag("--version", repctl::toolkit_version());
  app.require_subcommand(1);

  Flags flags;
  struct Entry {
    repctl::Task task;
    const char* help;
  };
  const Entry entries[] = {
      {repctl::Task::ClosedForm, "psi(t) and the optimal pulsing policy (psi.csv, policy.csv)"},
      {repctl::Task::SolveHjb, "finite-difference value surface (value.csv, value.json)"},
      {repctl::Task::Simulate, "one reputation path under a policy (path.csv)"},
      {repctl::Task::Evaluate, "Monte-Carlo value of a policy (evaluate.json)"},
      {repctl::Task::SweepSwitch, "single-switch time sweep (sweep.csv, sweep.json)"},
      {repctl::Task::Convergence, "grid refinement study (convergence.csv, convergence.json)"},
  };
  std::optional<repctl::Task> chosen;
  for (const auto& e : entries) {
    auto* cmd = app.add_subcommand(repctl::to_string(e.task), e.help);
    add_common(cmd, flags, true);
    cmd->callback([&chosen, task = e.task] { chosen = task; });
  }
  auto* validate = app.add_subcommand("validate", "check a config without running it");
  add_common(validate, flags, false);

  CLI11_PARSE(app, argc, argv);
  if (chosen) return run_task(*chosen, flags);
  return run_validate(flags);
}
