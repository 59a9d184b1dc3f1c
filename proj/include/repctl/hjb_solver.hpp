#ifndef REPCTL_HJB_SOLVER_HPP
#define REPCTL_HJB_SOLVER_HPP

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "repctl/closed_form.hpp"
#include "repctl/model_zoo.hpp"
#include "repctl/policy.hpp"

namespace repctl {

enum class GridKind { LogUniform, Uniform };

/// Reputation nodes and time-step count for a finite-difference solve.
/// LogUniform nodes are uniform in ln R (R_min > 0); Uniform nodes are
/// uniform in R and may start at 0.
struct SpatialGrid {
  GridKind kind = GridKind::LogUniform;
  double R_min = 1e-2;
  double R_max = 1e2;
  Eigen::Index n_space = 401;
  Eigen::Index n_time = 1;
  double T = 1.0;

  Eigen::VectorXd nodes() const;

  /// Node spacing in the solve coordinate (ln R or R).
  double spacing() const;

  /// Same extent with 2^level (n_space - 1) + 1 nodes.
  SpatialGrid refined(int level) const;
};

std::vector<FieldError> check(const SpatialGrid& grid, const std::string& prefix = "grid");

/// Truncation defaults: GBM on [1e-2, 1e2] log-spaced; Nerlove-Arrow on
/// [0, max(10, 5 (sigma / sqrt(2 kappa) + eps / kappa))] uniform.
SpatialGrid default_grid(const ControlProblem& problem, Eigen::Index n_space = 401,
                         Eigen::Index n_time = 1);

struct SolverOptions {
  /// Upper bound on dt * max_i (sigma^2 / dx^2 + |drift_i| / dx).
  double cfl_target = 0.9;
  /// Raise n_time to the stability limit instead of refusing with CflError.
  bool auto_raise_steps = true;
};

struct SolverDiagnostics {
  Eigen::Index n_time_requested = 0;
  Eigen::Index n_time_used = 0;
  double dt = 0.0;
  double cfl_ratio = 0.0;
  double wall_seconds = 0.0;
};

/// Value surface v(R_i, t_j) and the control resolved at each node, with
/// times ascending from 0 to T. Column j of mu_star is the control computed
/// from slice j, i.e. the one applied on the step that leaves t_j backward.
struct ValueGrid {
  SpatialGrid grid;
  Eigen::VectorXd nodes;
  Eigen::VectorXd times;
  Eigen::MatrixXd v;
  Eigen::MatrixXd mu_star;
  ControlProblem problem;
  SolverDiagnostics diagnostics;

  /// Bilinear interpolation in (solve coordinate, t).
  double value_at(double R, double t) const;
};

/// Smallest n_time meeting the CFL target on this grid.
Eigen::Index required_time_steps(const ControlProblem& problem, const SpatialGrid& grid,
                                 double cfl_target = 0.9);

/// Power-law price under GBM: explicit backward stepping of
///
///   e^{-rho t} h + v_t + sigma^2 R^2 v_RR / 2 + eps |R v_R - e^{-rho t} h| = 0
///
/// in x = ln R. The control is resolved from central differences, the drift
/// (mu* - sigma^2/2) is upwinded. Lower boundary follows v ~ R^gamma, upper
/// boundary v_xx = 0.
ValueGrid solve_gbm_power(const ControlProblem& problem, const SpatialGrid& grid,
                          const SolverOptions& options = {});

/// Mink-Seifert price under absorbed Nerlove-Arrow dynamics:
///
///   e^{-rho t} h + V_t - kappa R V_R + sigma^2 V_RR / 2 + eps |V_R - e^{-rho t} h| = 0,
///
/// V(R, T) = 0, V(0, t) = 0, V_RR = 0 at R_max. rho = 0 is the reference
/// setting; rho > 0 discounts the running revenue.
ValueGrid solve_nerlove_arrow(const ControlProblem& problem, const SpatialGrid& grid,
                              const SolverOptions& options = {});

/// Dispatches on the problem's dynamics.
ValueGrid solve_hjb(const ControlProblem& problem, const SpatialGrid& grid,
                    const SolverOptions& options = {});

/// Problem/grid combinations the solvers accept, as field errors.
std::vector<FieldError> check_solver_inputs(const ControlProblem& problem,
                                            const SpatialGrid& grid,
                                            const SolverOptions& options = {});

/// Lookup policy over the solved grid (nearest node, ties already resolved
/// to -eps in mu_star).
FeedbackPolicy extract_policy(const ValueGrid& vg);

/// Latest slice time at which any node with R in [R_lo, R_hi] advertises,
/// shifted half a step forward; nullopt when nobody advertises.
std::optional<double> inferred_switch_time(const ValueGrid& vg, double R_lo, double R_hi);

/// Comparison window used when none is given: [10 R_min, R_max / 10] on log
/// grids, the lower half of the range on uniform grids.
std::pair<double, double> default_window(const SpatialGrid& grid);

/// psi for the power-law GBM regime: the closed form when gamma = 1 and
/// rho = 0, otherwise the ODE integrated with step dt.
PsiSolution power_law_psi(const ControlProblem& problem, double dt);

struct ConvergenceLevel {
  Eigen::Index n_space = 0;
  Eigen::Index n_time = 0;
  double dx = 0.0;
  double dt = 0.0;
  /// Analytic mode: sup error against the exact surface.
  /// Self mode: sup difference to the next finer level (NaN on the finest).
  double error = 0.0;
};

struct ConvergenceReport {
  bool analytic = false;
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::vector<ConvergenceLevel> levels;
  /// log2 of successive error ratios.
  std::vector<double> orders;

  /// Errors (or successive differences) strictly decreasing.
  bool monotone() const;
};

/// Solves at 1x, 2x, ... refinement (n_space doubles, n_time quadruples so
/// coarse slices stay nested) and compares on coarse nodes inside the window
/// at every coarse slice. Analytic mode uses e^{-rho t} psi(t) R^gamma as the
/// reference whenever the power-law regime applies.
ConvergenceReport refine_and_compare(const ControlProblem& problem, const SpatialGrid& coarse,
                                     int levels = 3,
                                     std::optional<std::pair<double, double>> window = {},
                                     const SolverOptions& options = {});

/// Long-format CSV: R, t, v, mu_star.
void write_csv(std::ostream& os, const ValueGrid& vg);

std::string to_string(GridKind kind);

}  // namespace repctl

#endif  // REPCTL_HJB_SOLVER_HPP
