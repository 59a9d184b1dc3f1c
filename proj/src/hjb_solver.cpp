#include "repctl/hjb_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <tuple>

#include "repctl/closed_form.hpp"
#include "repctl/csv.hpp"

namespace repctl {

namespace {

// Coefficients of the resolved HJB in the solve coordinate y (ln R or R):
//
//   v_t + diffusion v_yy + drift(mu) v_y + (1 - mu) e^{-rho t} h = 0,
//
// with mu = eps sgn(v_y - e^{-rho t} h).
struct Coefficients {
  double diffusion;
  // drift = base_drift + mu
  Eigen::ArrayXd base_drift;
  Eigen::ArrayXd price;
};

Coefficients coefficients(const ControlProblem& problem, const Eigen::VectorXd& nodes) {
  const auto& dyn = problem.dynamics();
  const double half_var = 0.5 * dyn.sigma * dyn.sigma;
  Coefficients c;
  c.diffusion = half_var;
  c.price = eval_growth(problem.growth(), nodes.array());
  if (dyn.kind == DynamicsKind::GBM) {
    c.base_drift = Eigen::ArrayXd::Constant(nodes.size(), -half_var);
  } else {
    c.base_drift = -dyn.kappa * nodes.array();
  }
  return c;
}

double max_rate(const ControlProblem& problem, const SpatialGrid& grid) {
  const Coefficients c = coefficients(problem, grid.nodes());
  const double dy = grid.spacing();
  const double eps = problem.epsilon();
  const double max_drift = (c.base_drift.abs() + eps).maxCoeff();
  return 2.0 * c.diffusion / (dy * dy) + max_drift / dy;
}

enum class LowerBoundary { PowerScaling, Absorbing };

ValueGrid march(const ControlProblem& problem, const SpatialGrid& grid,
                const SolverOptions& options, LowerBoundary lower) {
  SolverOptions lenient = options;
  lenient.auto_raise_steps = true;
  if (auto errors = check_solver_inputs(problem, grid, lenient); !errors.empty())
    throw ValidationError(std::move(errors));

  const auto started = std::chrono::steady_clock::now();
  const Eigen::Index required = required_time_steps(problem, grid, options.cfl_target);
  Eigen::Index n_time = grid.n_time;
  if (n_time < required) {
    if (!options.auto_raise_steps)
      throw CflError(static_cast<std::size_t>(n_time), static_cast<std::size_t>(required));
    n_time = required;
  }

  const Eigen::VectorXd nodes = grid.nodes();
  const Eigen::Index n = nodes.size();
  const Coefficients c = coefficients(problem, nodes);
  const double T = grid.T;
  const double dt = T / static_cast<double>(n_time);
  const double dy = grid.spacing();
  const double eps = problem.epsilon();
  const double rho = problem.rho();
  const double diff_coef = c.diffusion / (dy * dy);
  const double gamma_scale = std::exp(-problem.growth().gamma * dy);

  SpatialGrid used = grid;
  used.n_time = n_time;
  ValueGrid vg{used,
               nodes,
               Eigen::VectorXd::LinSpaced(n_time + 1, 0.0, T),
               Eigen::MatrixXd::Zero(n, n_time + 1),
               Eigen::MatrixXd::Zero(n, n_time + 1),
               problem,
               {}};

  // mu* from central differences, ties to -eps.
  auto resolve = [&](Eigen::Index j) {
    const double disc = std::exp(-rho * vg.times[j]);
    auto v = vg.v.col(j);
    auto mu = vg.mu_star.col(j);
    for (Eigen::Index i = 0; i < n; ++i) {
      double grad;
      if (i == 0)
        grad = (v[1] - v[0]) / dy;
      else if (i == n - 1)
        grad = (v[n - 1] - v[n - 2]) / dy;
      else
        grad = (v[i + 1] - v[i - 1]) / (2.0 * dy);
      mu[i] = (grad - disc * c.price[i] > 0.0) ? eps : -eps;
    }
  };

  double worst = 0.0;
  for (Eigen::Index j = n_time; j > 0; --j) {
    resolve(j);
    const double disc = std::exp(-rho * vg.times[j]);
    const auto v = vg.v.col(j);
    const auto mu = vg.mu_star.col(j);
    auto next = vg.v.col(j - 1);
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
      const double drift = c.base_drift[i] + mu[i];
      const double transport = drift > 0.0 ? drift * (v[i + 1] - v[i]) / dy
                                            : drift * (v[i] - v[i - 1]) / dy;
      const double diffusion = diff_coef * (v[i + 1] - 2.0 * v[i] + v[i - 1]);
      const double source = (1.0 - mu[i]) * disc * c.price[i];
      next[i] = v[i] + dt * (source + transport + diffusion);
      worst = std::max(worst, dt * (2.0 * diff_coef + std::abs(drift) / dy));
    }
    next[0] = lower == LowerBoundary::Absorbing ? 0.0 : next[1] * gamma_scale;
    next[n - 1] = 2.0 * next[n - 2] - next[n - 3];
    if (!next.allFinite())
      throw DivergenceError("HJB solve produced non-finite values",
                            static_cast<std::size_t>(j - 1));
  }
  resolve(0);

  vg.diagnostics.n_time_requested = grid.n_time;
  vg.diagnostics.n_time_used = n_time;
  vg.diagnostics.dt = dt;
  vg.diagnostics.cfl_ratio = worst;
  vg.diagnostics.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return vg;
}

}  // namespace

Eigen::VectorXd SpatialGrid::nodes() const {
  if (kind == GridKind::LogUniform) {
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(n_space, std::log(R_min), std::log(R_max));
    Eigen::VectorXd r = x.array().exp();
    r[0] = R_min;
    r[n_space - 1] = R_max;
    return r;
  }
  return Eigen::VectorXd::LinSpaced(n_space, R_min, R_max);
}

double SpatialGrid::spacing() const {
  const double span = kind == GridKind::LogUniform ? std::log(R_max / R_min) : R_max - R_min;
  return span / static_cast<double>(n_space - 1);
}

SpatialGrid SpatialGrid::refined(int level) const {
  SpatialGrid g = *this;
  g.n_space = ((n_space - 1) << level) + 1;
  return g;
}

std::vector<FieldError> check(const SpatialGrid& grid, const std::string& prefix) {
  std::vector<FieldError> errors;
  if (!std::isfinite(grid.R_min) || grid.R_min < 0.0)
    errors.push_back({prefix + ".R_min", "must be finite and >= 0"});
  if (grid.kind == GridKind::LogUniform && !(grid.R_min > 0.0))
    errors.push_back({prefix + ".R_min", "log-uniform grid needs R_min > 0"});
  if (!std::isfinite(grid.R_max) || !(grid.R_max > grid.R_min))
    errors.push_back({prefix + ".R_max", "must be finite and > R_min"});
  if (grid.n_space < 3) errors.push_back({prefix + ".n_space", "need at least 3 nodes"});
  if (grid.n_time < 1) errors.push_back({prefix + ".n_time", "need at least 1 step"});
  if (!std::isfinite(grid.T) || !(grid.T > 0.0))
    errors.push_back({prefix + ".T", "horizon must be > 0"});
  return errors;
}

SpatialGrid default_grid(const ControlProblem& problem, Eigen::Index n_space,
                         Eigen::Index n_time) {
  SpatialGrid g;
  g.n_space = n_space;
  g.n_time = n_time;
  g.T = problem.horizon();
  if (problem.dynamics().kind == DynamicsKind::GBM) {
    g.kind = GridKind::LogUniform;
    g.R_min = 1e-2;
    g.R_max = 1e2;
  } else {
    const auto& d = problem.dynamics();
    g.kind = GridKind::Uniform;
    g.R_min = 0.0;
    double scale = 10.0;
    if (d.kappa > 0.0)
      scale = std::max(10.0, 5.0 * (d.sigma / std::sqrt(2.0 * d.kappa) + problem.epsilon() / d.kappa));
    g.R_max = scale;
  }
  return g;
}

Eigen::Index required_time_steps(const ControlProblem& problem, const SpatialGrid& grid,
                                 double cfl_target) {
  const double rate = max_rate(problem, grid);
  if (rate <= 0.0) return 1;
  const double steps = std::ceil(grid.T * rate / cfl_target * (1.0 - 1e-12));
  return std::max<Eigen::Index>(1, static_cast<Eigen::Index>(steps));
}

std::vector<FieldError> check_solver_inputs(const ControlProblem& problem,
                                            const SpatialGrid& grid,
                                            const SolverOptions& options) {
  auto errors = check(grid);
  if (!(options.cfl_target > 0.0 && options.cfl_target <= 1.0))
    errors.push_back({"grid.cfl_target", "must lie in (0, 1]"});
  if (problem.processing().kind != ProcessingKind::Linear)
    errors.push_back({"problem.processing.kind", "HJB solvers need the Linear processing rate"});
  if (std::abs(grid.T - problem.horizon()) > 1e-12 * problem.horizon())
    errors.push_back({"grid.T", "grid horizon must equal the problem horizon"});
  if (problem.dynamics().kind == DynamicsKind::GBM) {
    if (problem.growth().kind != GrowthKind::PowerLaw)
      errors.push_back({"problem.growth.kind", "GBM solver needs the PowerLaw price"});
    if (grid.kind != GridKind::LogUniform)
      errors.push_back({"grid.kind", "GBM solver needs a LogUniform grid"});
  } else {
    if (problem.growth().kind != GrowthKind::MinkSeifert)
      errors.push_back({"problem.growth.kind", "Nerlove-Arrow solver needs the MinkSeifert price"});
    if (grid.kind != GridKind::Uniform)
      errors.push_back({"grid.kind", "Nerlove-Arrow solver needs a Uniform grid"});
    if (grid.R_min != 0.0)
      errors.push_back({"grid.R_min", "Nerlove-Arrow grid must start at the absorbing boundary 0"});
  }
  if (errors.empty() && !options.auto_raise_steps) {
    const Eigen::Index need = required_time_steps(problem, grid, options.cfl_target);
    if (grid.n_time < need)
      errors.push_back({"grid.n_time", "CFL limit needs at least " + std::to_string(need) +
                                           " time steps"});
  }
  return errors;
}

ValueGrid solve_gbm_power(const ControlProblem& problem, const SpatialGrid& grid,
                          const SolverOptions& options) {
  if (problem.dynamics().kind != DynamicsKind::GBM)
    throw ValidationError(std::vector<FieldError>{
        {"problem.dynamics.kind", "solve_gbm_power needs GBM dynamics"}});
  return march(problem, grid, options, LowerBoundary::PowerScaling);
}

ValueGrid solve_nerlove_arrow(const ControlProblem& problem, const SpatialGrid& grid,
                              const SolverOptions& options) {
  if (problem.dynamics().kind != DynamicsKind::NerloveArrow)
    throw ValidationError(std::vector<FieldError>{
        {"problem.dynamics.kind", "solve_nerlove_arrow needs NerloveArrow dynamics"}});
  return march(problem, grid, options, LowerBoundary::Absorbing);
}

ValueGrid solve_hjb(const ControlProblem& problem, const SpatialGrid& grid,
                    const SolverOptions& options) {
  if (problem.dynamics().kind == DynamicsKind::GBM) return solve_gbm_power(problem, grid, options);
  return solve_nerlove_arrow(problem, grid, options);
}

double ValueGrid::value_at(double R, double t) const {
  const Eigen::Index n = nodes.size();
  if (!(R >= nodes[0] && R <= nodes[n - 1]))
    throw DomainError("ValueGrid::value_at: reputation outside the grid");
  if (!(t >= 0.0 && t <= grid.T)) throw DomainError("ValueGrid::value_at: time outside [0, T]");

  const bool log_grid = grid.kind == GridKind::LogUniform;
  const double y = log_grid ? std::log(R / nodes[0]) : R - nodes[0];
  const double fy = std::clamp(y / grid.spacing(), 0.0, static_cast<double>(n - 1));
  const Eigen::Index i = std::min<Eigen::Index>(n - 2, static_cast<Eigen::Index>(fy));
  const double wy = fy - static_cast<double>(i);

  const Eigen::Index m = times.size() - 1;
  const double ft = std::clamp(t / grid.T * static_cast<double>(m), 0.0, static_cast<double>(m));
  const Eigen::Index j = std::min<Eigen::Index>(m - 1, static_cast<Eigen::Index>(ft));
  const double wt = ft - static_cast<double>(j);

  const double a = (1 - wy) * v(i, j) + wy * v(i + 1, j);
  const double b = (1 - wy) * v(i, j + 1) + wy * v(i + 1, j + 1);
  return (1 - wt) * a + wt * b;
}

FeedbackPolicy extract_policy(const ValueGrid& vg) {
  return FeedbackPolicy(vg.nodes, vg.grid.kind == GridKind::LogUniform, vg.times, vg.mu_star,
                        vg.problem.epsilon());
}

std::optional<double> inferred_switch_time(const ValueGrid& vg, double R_lo, double R_hi) {
  for (Eigen::Index j = vg.times.size() - 1; j >= 0; --j) {
    for (Eigen::Index i = 0; i < vg.nodes.size(); ++i) {
      if (vg.nodes[i] < R_lo || vg.nodes[i] > R_hi) continue;
      if (vg.mu_star(i, j) > 0.0) return vg.times[j] + 0.5 * vg.diagnostics.dt;
    }
  }
  return std::nullopt;
}

std::pair<double, double> default_window(const SpatialGrid& grid) {
  if (grid.kind == GridKind::LogUniform) return {grid.R_min * 10.0, grid.R_max / 10.0};
  return {grid.R_min, grid.R_min + 0.5 * (grid.R_max - grid.R_min)};
}

PsiSolution power_law_psi(const ControlProblem& problem, double dt) {
  if (problem.regime() != AnalyticRegime::PowerLawGbm)
    throw DomainError("power_law_psi: needs the power-law GBM regime");
  const double gamma = problem.growth().gamma;
  if (gamma == 1.0 && problem.rho() == 0.0)
    return PsiSolution::closed_form_10(problem.epsilon(), problem.horizon());
  return integrate_psi(gamma, problem.rho(), problem.dynamics().sigma, problem.epsilon(),
                       problem.horizon(), dt);
}

bool ConvergenceReport::monotone() const {
  double previous = std::numeric_limits<double>::infinity();
  for (const auto& level : levels) {
    if (std::isnan(level.error)) continue;
    if (!(level.error < previous)) return false;
    previous = level.error;
  }
  return true;
}

ConvergenceReport refine_and_compare(const ControlProblem& problem, const SpatialGrid& coarse,
                                     int levels,
                                     std::optional<std::pair<double, double>> window,
                                     const SolverOptions& options) {
  if (levels < 2) throw DomainError("refine_and_compare: need at least two levels");

  ConvergenceReport report;
  report.analytic = problem.regime() == AnalyticRegime::PowerLawGbm;
  std::tie(report.window_lo, report.window_hi) = window ? *window : default_window(coarse);

  const Eigen::Index base_steps =
      std::max(coarse.n_time, required_time_steps(problem, coarse, options.cfl_target));
  std::vector<ValueGrid> solves;
  for (int k = 0; k < levels; ++k) {
    SpatialGrid g = coarse.refined(k);
    g.n_time = base_steps << (2 * k);
    solves.push_back(solve_hjb(problem, g, options));
  }

  const ValueGrid& c = solves.front();
  std::vector<Eigen::Index> coarse_nodes;
  for (Eigen::Index i = 1; i + 1 < c.nodes.size(); ++i)
    if (c.nodes[i] >= report.window_lo && c.nodes[i] <= report.window_hi) coarse_nodes.push_back(i);

  auto sample = [&](int k, Eigen::Index i, Eigen::Index j) {
    return solves[k].v(i << k, j << (2 * k));
  };

  std::optional<PsiSolution> psi;
  if (report.analytic) psi = power_law_psi(problem, 1e-4 * problem.horizon());

  for (int k = 0; k < levels; ++k) {
    ConvergenceLevel level;
    level.n_space = solves[k].grid.n_space;
    level.n_time = solves[k].grid.n_time;
    level.dx = solves[k].grid.spacing();
    level.dt = solves[k].diagnostics.dt;
    double err = 0.0;
    if (report.analytic) {
      for (Eigen::Index j = 0; j < c.times.size(); ++j)
        for (Eigen::Index i : coarse_nodes)
          err = std::max(err, std::abs(sample(k, i, j) -
                                       value_power_law(c.nodes[i], c.times[j], *psi)));
    } else if (k + 1 < levels) {
      for (Eigen::Index j = 0; j < c.times.size(); ++j)
        for (Eigen::Index i : coarse_nodes)
          err = std::max(err, std::abs(sample(k + 1, i, j) - sample(k, i, j)));
    } else {
      err = std::numeric_limits<double>::quiet_NaN();
    }
    level.error = err;
    report.levels.push_back(level);
  }
  for (std::size_t k = 0; k + 1 < report.levels.size(); ++k) {
    const double a = report.levels[k].error;
    const double b = report.levels[k + 1].error;
    if (std::isfinite(a) && std::isfinite(b) && a > 0.0 && b > 0.0)
      report.orders.push_back(std::log2(a / b));
  }
  return report;
}

void write_csv(std::ostream& os, const ValueGrid& vg) {
  csv::header(os, {"R", "t", "v", "mu_star"});
  for (Eigen::Index j = 0; j < vg.times.size(); ++j)
    for (Eigen::Index i = 0; i < vg.nodes.size(); ++i)
      csv::row(os, {vg.nodes[i], vg.times[j], vg.v(i, j), vg.mu_star(i, j)});
}

std::string to_string(GridKind kind) {
  return kind == GridKind::LogUniform ? "LogUniform" : "Uniform";
}

}  // namespace repctl
