#ifndef REPCTL_SIMULATE_HPP
#define REPCTL_SIMULATE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "repctl/model_zoo.hpp"
#include "repctl/policy.hpp"

namespace repctl {

/// One simulated reputation trajectory. controls[k] is the control applied on
/// [times[k], times[k+1]).
struct Path {
  std::vector<double> times;
  std::vector<double> reputations;
  std::vector<double> controls;
  std::optional<double> absorbed_at;
  std::uint64_t seed = 0;
};

/// Seed of path `index` under `base_seed` (splitmix64 of both).
std::uint64_t path_seed(std::uint64_t base_seed, std::uint64_t index);

/// Simulates R on [t0, T] with base step (T - t0) / ceil((T - t0) / dt).
///
/// GBM steps are the exact lognormal update with mu frozen at the left
/// endpoint; Nerlove-Arrow steps are Euler-Maruyama, and the first step that
/// reaches R <= 0 is cut at the linearly interpolated zero crossing. Time-only
/// switches of the policy inside a step add a stamp there, filled by a
/// Brownian bridge from a separate stream, so every base step consumes exactly
/// one normal draw whatever the policy.
Path simulate_path(const ReputationDynamics& dynamics, const ControlPolicy& policy, double R0,
                   double t0, double T, double dt, std::uint64_t seed);

struct MCOptions {
  std::size_t n_paths = 100000;
  /// Base step; 0 selects 1e-3 (T - t0).
  double dt = 0.0;
  std::uint64_t seed = 0;
};

struct MCEstimate {
  double mean = 0.0;
  /// Sample standard deviation / sqrt(n_paths).
  double std_error = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  double dt = 0.0;
  double rho = 0.0;
};

/// Estimate plus the per-path discounted revenues it was built from.
struct MCSamples {
  MCEstimate estimate;
  Eigen::VectorXd values;
};

/// Monte-Carlo value of a policy: per path, the trapezoid rule for
/// int e^{-rho s} p(mu_s) h(R_s) ds over the simulated stamps, up to
/// absorption. Paths run on hardware_concurrency threads unless
/// REPCTL_THREADS sets the count; the result does not depend on it.
MCSamples sample_policy_mc(const ControlProblem& problem, const ControlPolicy& policy, double R0,
                           double t0, const MCOptions& options);

MCEstimate evaluate_policy_mc(const ControlProblem& problem, const ControlPolicy& policy,
                              double R0, double t0, const MCOptions& options);

/// Mean and standard error of a - b from samples drawn with the same seeds.
struct Difference {
  double mean = 0.0;
  double std_error = 0.0;
};

Difference paired_difference(const MCSamples& a, const MCSamples& b);

/// sqrt(se_a^2 + se_b^2), for estimates drawn from independent streams.
double independent_std_error(const MCEstimate& a, const MCEstimate& b);

/// Mean and standard error of a sample, summed pairwise around its first
/// entry so identical samples give an exact mean and zero error.
MCEstimate summarize(const Eigen::VectorXd& values);

enum class SweepMode { Analytic, MonteCarlo };

struct SweepPoint {
  double t_switch = 0.0;
  double value = 0.0;
  /// Zero in analytic mode.
  double std_error = 0.0;
};

struct SweepResult {
  SweepMode mode = SweepMode::Analytic;
  std::vector<SweepPoint> points;
  /// Per-path values (n_paths x points), kept on request in MC mode.
  Eigen::MatrixXd samples;

  /// Index of the largest value (first on ties).
  std::size_t argmax() const;

  /// Standard error of value[i] - value[j] from the common-random-number
  /// samples; needs keep_samples.
  double paired_std_error(std::size_t i, std::size_t j) const;
};

/// Single-switch family: +eps on [t0, t_switch), -eps on [t_switch, T].
/// Analytic mode needs the power-law GBM regime and integrates the exact
/// expectation; MC mode reuses the same path seeds at every switch time.
SweepResult sweep_switch_time(const ControlProblem& problem, double R0, double t0,
                              const std::vector<double>& switch_times, SweepMode mode,
                              const MCOptions& options = {}, bool keep_samples = false);

/// Expected revenue of the single-switch policy for power-law GBM.
double one_switch_expectation(const ControlProblem& problem, double R0, double t0,
                              double t_switch);

/// n points t0 + k (T - t0) / (n - 1).
std::vector<double> uniform_switch_grid(double t0, double T, std::size_t n);

/// Path CSV (t, R, mu); mu is empty on the last stamp.
void write_csv(std::ostream& os, const Path& path);

/// Sweep CSV (t_switch, value, std_error).
void write_csv(std::ostream& os, const SweepResult& sweep);

std::string to_string(SweepMode mode);

}  // namespace repctl

#endif  // REPCTL_SIMULATE_HPP
