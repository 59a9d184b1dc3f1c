#include "repctl/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <ostream>
#include <random>
#include <string>
#include <thread>

#include "repctl/closed_form.hpp"
#include "repctl/csv.hpp"

namespace repctl {

namespace {

constexpr std::uint64_t kBridgeSalt = 0xD1B54A32D192ED03ULL;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Eigen::Index step_count(double t0, double T, double dt) {
  const double span = T - t0;
  if (!(span > 0.0)) return 0;
  return std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::ceil(span / dt - 1e-9)));
}

void require_start(const ReputationDynamics& dynamics, double R0, double t0, double T,
                   double dt, const char* op) {
  const std::string name(op);
  if (dynamics.kind == DynamicsKind::GBM) {
    if (!(R0 > 0.0) || !std::isfinite(R0))
      throw DomainError(name + ": GBM paths need R0 > 0");
  } else if (!(R0 >= 0.0) || !std::isfinite(R0)) {
    throw DomainError(name + ": Nerlove-Arrow paths need R0 >= 0");
  }
  if (!(t0 >= 0.0 && t0 <= T) || !std::isfinite(T))
    throw DomainError(name + ": start time outside [0, T]");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError(name + ": dt must be > 0");
}

// Generates one path segment by segment; emit(u, R_u, w, R_w, mu) sees every
// piece in order. Returns the absorption time, if any.
class Stepper {
 public:
  Stepper(const ReputationDynamics& dynamics, const ControlPolicy& policy, double t0, double T,
          double dt)
      : dynamics_(dynamics),
        policy_(policy),
        t0_(t0),
        T_(T),
        n_(step_count(t0, T, dt)),
        h_(n_ > 0 ? (T - t0) / static_cast<double>(n_) : 0.0),
        first_switch_(policy.next_switch_after(t0)) {}

  template <typename Emit>
  std::optional<double> run(double R0, std::uint64_t seed, Emit&& emit) const {
    const bool absorbing = dynamics_.absorbing_at_zero();
    if (absorbing && R0 <= 0.0) return t0_;

    std::mt19937_64 engine(seed);
    std::normal_distribution<double> normal;
    std::optional<std::mt19937_64> bridge;
    std::normal_distribution<double> bridge_normal;

    std::optional<double> pending = first_switch_;
    const double sigma = dynamics_.sigma;
    const double kappa = dynamics_.kappa;
    const bool gbm = dynamics_.kind == DynamicsKind::GBM;
    double R = R0;
    for (Eigen::Index k = 0; k < n_; ++k) {
      const double a = t0_ + static_cast<double>(k) * h_;
      const double b = (k + 1 == n_) ? T_ : t0_ + static_cast<double>(k + 1) * h_;
      const double dW = std::sqrt(b - a) * normal(engine);

      double u = a;
      double Wu = 0.0;
      for (;;) {
        double w = b;
        double Ww = dW;
        if (pending && *pending < b) {
          w = *pending;
          pending = policy_.next_switch_after(w);
          if (!bridge) bridge.emplace(splitmix64(seed ^ kBridgeSalt));
          const double mean = Wu + (w - u) / (b - u) * (dW - Wu);
          const double var = (w - u) * (b - w) / (b - u);
          Ww = mean + std::sqrt(var) * bridge_normal(*bridge);
        }
        const double mu = policy_(R, u);
        const double len = w - u;
        double next;
        if (gbm) {
          next = R * std::exp((mu - 0.5 * sigma * sigma) * len + sigma * (Ww - Wu));
        } else {
          next = R + (mu - kappa * R) * len + sigma * (Ww - Wu);
          if (absorbing && next <= 0.0) {
            const double tau = u + R / (R - next) * len;
            emit(u, R, tau, 0.0, mu);
            return tau;
          }
        }
        emit(u, R, w, next, mu);
        R = next;
        u = w;
        Wu = Ww;
        if (w == b) break;
      }
    }
    return std::nullopt;
  }

 private:
  const ReputationDynamics& dynamics_;
  const ControlPolicy& policy_;
  double t0_;
  double T_;
  Eigen::Index n_;
  double h_;
  std::optional<double> first_switch_;
};

double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

unsigned worker_count(std::size_t n_paths) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("REPCTL_THREADS")) {
    char* end = nullptr;
    const unsigned long cap = std::strtoul(env, &end, 10);
    if (end != env && cap > 0) n = static_cast<unsigned>(std::min<unsigned long>(cap, 256));
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(1, n_paths / 1000)));
}

// Runs body(i) for i in [0, n) on up to worker_count threads.
template <typename Body>
void parallel_for(std::size_t n, Body body) {
  const unsigned workers = worker_count(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> failures(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = n * w / workers;
    const std::size_t hi = n * (w + 1) / workers;
    pool.emplace_back([&, w, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
}

}  // namespace

std::uint64_t path_seed(std::uint64_t base_seed, std::uint64_t index) {
  return splitmix64(base_seed ^ splitmix64(index));
}

Path simulate_path(const ReputationDynamics& dynamics, const ControlPolicy& policy, double R0,
                   double t0, double T, double dt, std::uint64_t seed) {
  require_start(dynamics, R0, t0, T, dt, "simulate_path");
  Path path;
  path.seed = seed;
  path.times.push_back(t0);
  path.reputations.push_back(R0);
  const Stepper stepper(dynamics, policy, t0, T, dt);
  path.absorbed_at = stepper.run(R0, seed, [&](double, double, double w, double Rw, double mu) {
    path.times.push_back(w);
    path.reputations.push_back(Rw);
    path.controls.push_back(mu);
  });
  return path;
}

MCEstimate summarize(const Eigen::VectorXd& values) {
  const auto n = static_cast<std::size_t>(values.size());
  if (n < 2) throw DomainError("summarize: need at least two samples");
  const double shift = values[0];
  const Eigen::VectorXd centred = values.array() - shift;
  const double offset = pairwise_sum(centred.data(), n) / static_cast<double>(n);
  const Eigen::VectorXd dev = centred.array() - offset;
  const Eigen::VectorXd sq = dev.array().square();
  const double var = pairwise_sum(sq.data(), n) / static_cast<double>(n - 1);
  MCEstimate est;
  est.mean = shift + offset;
  est.std_error = std::sqrt(var / static_cast<double>(n));
  est.n_paths = n;
  return est;
}

MCSamples sample_policy_mc(const ControlProblem& problem, const ControlPolicy& policy, double R0,
                           double t0, const MCOptions& options) {
  const double T = problem.horizon();
  const double dt = options.dt > 0.0 ? options.dt : 1e-3 * (T - t0);
  if (options.n_paths < 2) throw DomainError("evaluate_policy_mc: n_paths must be >= 2");
  if (options.dt < 0.0 || !std::isfinite(options.dt))
    throw DomainError("evaluate_policy_mc: dt must be > 0");
  if (policy.bound() > problem.epsilon() * (1.0 + 1e-12))
    throw DomainError("evaluate_policy_mc: policy exceeds the control bound");
  require_start(problem.dynamics(), R0, t0, T, dt > 0.0 ? dt : 1.0, "evaluate_policy_mc");

  const Stepper stepper(problem.dynamics(), policy, t0, T, dt > 0.0 ? dt : 1.0);
  const double rho = problem.rho();
  const auto& growth = problem.growth();
  const auto& processing = problem.processing();

  MCSamples out;
  out.values.resize(static_cast<Eigen::Index>(options.n_paths));
  parallel_for(options.n_paths, [&](std::size_t i) {
    double total = 0.0;
    double left = eval_growth(growth, R0) * (rho == 0.0 ? 1.0 : std::exp(-rho * t0));
    stepper.run(R0, path_seed(options.seed, i), [&](double u, double, double w, double Rw,
                                                     double mu) {
      const double right = eval_growth(growth, Rw) * (rho == 0.0 ? 1.0 : std::exp(-rho * w));
      total += 0.5 * (w - u) * processing_rate(processing, mu) * (left + right);
      left = right;
    });
    out.values[static_cast<Eigen::Index>(i)] = total;
  });

  out.estimate = summarize(out.values);
  out.estimate.seed = options.seed;
  out.estimate.dt = dt;
  out.estimate.rho = rho;
  return out;
}

MCEstimate evaluate_policy_mc(const ControlProblem& problem, const ControlPolicy& policy,
                              double R0, double t0, const MCOptions& options) {
  return sample_policy_mc(problem, policy, R0, t0, options).estimate;
}

Difference paired_difference(const MCSamples& a, const MCSamples& b) {
  if (a.values.size() != b.values.size() || a.estimate.seed != b.estimate.seed)
    throw DomainError("paired_difference: samples were not drawn with common random numbers");
  const MCEstimate d = summarize(a.values - b.values);
  return {d.mean, d.std_error};
}

double independent_std_error(const MCEstimate& a, const MCEstimate& b) {
  return std::hypot(a.std_error, b.std_error);
}

double one_switch_expectation(const ControlProblem& problem, double R0, double t0,
                              double t_switch) {
  if (problem.regime() != AnalyticRegime::PowerLawGbm)
    throw DomainError("one_switch_expectation: needs the power-law GBM regime");
  const double T = problem.horizon();
  if (!(R0 > 0.0)) throw DomainError("one_switch_expectation: R0 must be > 0");
  if (!(t0 >= 0.0 && t0 <= T)) throw DomainError("one_switch_expectation: t0 outside [0, T]");
  if (!(t_switch >= 0.0 && t_switch <= T))
    throw DomainError("one_switch_expectation: switch time outside [0, T]");

  const double gamma = problem.growth().gamma;
  const double sigma = problem.dynamics().sigma;
  const double rho = problem.rho();
  const double eps = problem.epsilon();
  const double ito = 0.5 * sigma * sigma * gamma * (gamma - 1.0);
  const double ts = std::clamp(t_switch, t0, T);

  // E[R_s^gamma] grows at rate gamma mu + ito on each constant piece.
  const double k_up = gamma * eps + ito;
  const double k_down = -gamma * eps + ito;
  const double level = std::pow(R0, gamma);
  const double first =
      level * (1.0 - eps) * std::exp(-rho * t0) * detail::expm1_ratio(k_up - rho, ts - t0);
  const double at_switch = level * std::exp(k_up * (ts - t0));
  const double second =
      at_switch * (1.0 + eps) * std::exp(-rho * ts) * detail::expm1_ratio(k_down - rho, T - ts);
  return first + second;
}

std::vector<double> uniform_switch_grid(double t0, double T, std::size_t n) {
  if (n < 2) throw DomainError("uniform_switch_grid: need at least two points");
  std::vector<double> grid(n);
  for (std::size_t k = 0; k < n; ++k)
    grid[k] = (k + 1 == n) ? T : t0 + (T - t0) * static_cast<double>(k) / static_cast<double>(n - 1);
  return grid;
}

SweepResult sweep_switch_time(const ControlProblem& problem, double R0, double t0,
                              const std::vector<double>& switch_times, SweepMode mode,
                              const MCOptions& options, bool keep_samples) {
  if (switch_times.empty()) throw DomainError("sweep_switch_time: no switch times");
  for (double t : switch_times)
    if (!(t >= 0.0 && t <= problem.horizon()))
      throw DomainError("sweep_switch_time: switch time outside [0, T]");

  SweepResult result;
  result.mode = mode;
  result.points.reserve(switch_times.size());
  if (mode == SweepMode::Analytic) {
    for (double t : switch_times)
      result.points.push_back({t, one_switch_expectation(problem, R0, t0, t), 0.0});
    return result;
  }

  if (keep_samples)
    result.samples.resize(static_cast<Eigen::Index>(options.n_paths),
                          static_cast<Eigen::Index>(switch_times.size()));
  for (std::size_t j = 0; j < switch_times.size(); ++j) {
    const ControlPolicy policy(one_switch_policy(problem.epsilon(), switch_times[j]));
    MCSamples s = sample_policy_mc(problem, policy, R0, t0, options);
    result.points.push_back({switch_times[j], s.estimate.mean, s.estimate.std_error});
    if (keep_samples) result.samples.col(static_cast<Eigen::Index>(j)) = s.values;
  }
  return result;
}

std::size_t SweepResult::argmax() const {
  std::size_t best = 0;
  for (std::size_t j = 1; j < points.size(); ++j)
    if (points[j].value > points[best].value) best = j;
  return best;
}

double SweepResult::paired_std_error(std::size_t i, std::size_t j) const {
  if (samples.cols() == 0) throw DomainError("paired_std_error: samples were not kept");
  const Eigen::VectorXd d = samples.col(static_cast<Eigen::Index>(i)) -
                            samples.col(static_cast<Eigen::Index>(j));
  return summarize(d).std_error;
}

void write_csv(std::ostream& os, const Path& path) {
  csv::header(os, {"t", "R", "mu"});
  for (std::size_t k = 0; k < path.times.size(); ++k) {
    os << csv::format(path.times[k]) << ',' << csv::format(path.reputations[k]) << ',';
    if (k < path.controls.size()) os << csv::format(path.controls[k]);
    os << '\n';
  }
}

void write_csv(std::ostream& os, const SweepResult& sweep) {
  csv::header(os, {"t_switch", "value", "std_error"});
  for (const auto& p : sweep.points) csv::row(os, {p.t_switch, p.value, p.std_error});
}

std::string to_string(SweepMode mode) {
  return mode == SweepMode::Analytic ? "analytic" : "mc";
}

}  // namespace repctl
