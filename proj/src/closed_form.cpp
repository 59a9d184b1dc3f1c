#include "repctl/closed_form.hpp"

#include <algorithm>
#include <ostream>

#include "repctl/csv.hpp"

namespace repctl {

namespace {

// One classical RK4 step of length h for d psi / ds = F_b(psi), with the
// absolute value resolved to the fixed branch b = sgn(gamma psi - 1).
struct Branch {
  double gamma, rho, diffusion, epsilon;
  int sign;

  double operator()(double psi) const {
    return 1.0 - rho * psi + diffusion * psi + epsilon * sign * (gamma * psi - 1.0);
  }

  double step(double psi, double h) const {
    const Branch& f = *this;
    const double k1 = f(psi);
    const double k2 = f(psi + 0.5 * h * k1);
    const double k3 = f(psi + 0.5 * h * k2);
    const double k4 = f(psi + h * k3);
    return psi + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
};

constexpr double kCrossingTolerance = 1e-12;

}  // namespace

PsiSolution PsiSolution::closed_form_10(double epsilon, double T) {
  detail::require_bound(epsilon, "PsiSolution::closed_form_10");
  if (!(T > 0.0) || !std::isfinite(T))
    throw DomainError("PsiSolution::closed_form_10: horizon must be > 0");
  PsiSolution psi;
  psi.gamma_ = 1.0;
  psi.rho_ = 0.0;
  psi.sigma_ = 0.0;
  psi.epsilon_ = epsilon;
  psi.T_ = T;
  psi.kind_ = PsiKind::ClosedForm10;
  const double s = T - detail::log1p_ratio(epsilon);
  if (s > 0.0) psi.crossings_.push_back(s);
  return psi;
}

double PsiSolution::slope(double psi) const {
  const double diffusion = 0.5 * sigma_ * sigma_ * gamma_ * (gamma_ - 1.0);
  return 1.0 - rho_ * psi + diffusion * psi + epsilon_ * std::abs(gamma_ * psi - 1.0);
}

double PsiSolution::operator()(double t) const {
  detail::require_time(t, T_, "PsiSolution");
  if (kind_ == PsiKind::ClosedForm10) return psi_closed_form_10(t, epsilon_, T_);

  const Eigen::Index n = times_.size() - 1;
  const double h = T_ / static_cast<double>(n);
  const Eigen::Index j = std::min<Eigen::Index>(n - 1, static_cast<Eigen::Index>(t / h));
  const double u = (t - times_[j]) / h;
  const double p0 = values_[j];
  const double p1 = values_[j + 1];
  // d psi / dt = -F(psi)
  const double m0 = -slope(p0) * h;
  const double m1 = -slope(p1) * h;
  const double u2 = u * u;
  const double u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * p0 + (u3 - 2 * u2 + u) * m0 + (-2 * u3 + 3 * u2) * p1 +
         (u3 - u2) * m1;
}

double PsiSolution::derivative(double t) const { return -slope((*this)(t)); }

std::optional<double> PsiSolution::switch_time() const {
  if (crossings_.empty()) return std::nullopt;
  return crossings_.back();
}

bool PsiSolution::strictly_decreasing() const {
  const Eigen::MatrixX2d tab = table(1000);
  for (Eigen::Index j = 0; j + 1 < tab.rows(); ++j)
    if (!(tab(j, 1) > tab(j + 1, 1))) return false;
  return true;
}

Eigen::MatrixX2d PsiSolution::table(Eigen::Index n_steps) const {
  if (kind_ == PsiKind::NumericGrid) {
    Eigen::MatrixX2d tab(times_.size(), 2);
    tab << times_, values_;
    return tab;
  }
  n_steps = std::max<Eigen::Index>(1, n_steps);
  Eigen::MatrixX2d tab(n_steps + 1, 2);
  for (Eigen::Index j = 0; j <= n_steps; ++j) {
    const double t = (j == n_steps) ? T_ : T_ * static_cast<double>(j) / n_steps;
    tab(j, 0) = t;
    tab(j, 1) = psi_closed_form_10(t, epsilon_, T_);
  }
  return tab;
}

PsiSolution integrate_psi(double gamma, double rho, double sigma, double epsilon,
                          double T, double dt) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("integrate_psi: gamma must lie in (0, 1]");
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw DomainError("integrate_psi: rho must be >= 0");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("integrate_psi: sigma must be >= 0");
  detail::require_bound(epsilon, "integrate_psi");
  if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("integrate_psi: horizon must be > 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("integrate_psi: dt must be > 0");

  PsiSolution psi;
  psi.gamma_ = gamma;
  psi.rho_ = rho;
  psi.sigma_ = sigma;
  psi.epsilon_ = epsilon;
  psi.T_ = T;
  psi.kind_ = PsiKind::NumericGrid;

  const auto n = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::ceil(T / dt - 1e-9)));
  const double h = T / static_cast<double>(n);
  psi.times_ = Eigen::VectorXd::LinSpaced(n + 1, 0.0, T);
  psi.values_.resize(n + 1);
  psi.values_[n] = 0.0;

  const double diffusion = 0.5 * sigma * sigma * gamma * (gamma - 1.0);
  const double level = 1.0 / gamma;
  auto branch_at = [&](double p) {
    const double gap = gamma * p - 1.0;
    if (gap > 0.0) return +1;
    if (gap < 0.0) return -1;
    // Exactly on the switching level: take the side the flow moves into.
    return (1.0 - rho * p + diffusion * p) > 0.0 ? +1 : -1;
  };

  std::vector<double> crossings;
  double current = 0.0;
  for (Eigen::Index k = n; k > 0; --k) {
    const Branch f{gamma, rho, diffusion, epsilon, branch_at(current)};
    double next = f.step(current, h);
    if ((gamma * next - 1.0) * f.sign < 0.0) {
      double lo = 0.0;
      double hi = h;
      while (hi - lo > kCrossingTolerance) {
        const double mid = 0.5 * (lo + hi);
        if ((gamma * f.step(current, mid) - 1.0) * f.sign >= 0.0)
          lo = mid;
        else
          hi = mid;
      }
      const double theta = 0.5 * (lo + hi);
      crossings.push_back(psi.times_[k] - theta);
      const Branch g{gamma, rho, diffusion, epsilon, -f.sign};
      next = g.step(level, h - theta);
    }
    if (!std::isfinite(next))
      throw IntegrationError("integrate_psi: non-finite value at t = " +
                             std::to_string(psi.times_[k - 1]));
    psi.values_[k - 1] = next;
    current = next;
  }
  std::reverse(crossings.begin(), crossings.end());
  psi.crossings_ = std::move(crossings);
  return psi;
}

double value_power_law(double R, double t, const PsiSolution& psi) {
  if (!(R > 0.0)) throw DomainError("value_power_law: R must be > 0");
  return std::exp(-psi.rho() * t) * psi(t) * std::pow(R, psi.gamma());
}

PulsingPolicy optimal_pulsing_policy(const PsiSolution& psi) {
  PulsingPolicy policy;
  policy.epsilon = psi.epsilon();
  for (double t : psi.crossings())
    if (t > 0.0) policy.switch_times.push_back(t);
  // gamma psi(T) = 0 < 1, so the control ends at -eps; count flips backward.
  policy.initial_sign = (policy.switch_times.size() % 2 == 0) ? -1 : +1;
  return policy;
}

void write_csv(std::ostream& os, const PsiSolution& psi, Eigen::Index n_steps) {
  const Eigen::MatrixX2d tab = psi.table(n_steps);
  csv::header(os, {"t", "psi"});
  for (Eigen::Index j = 0; j < tab.rows(); ++j) csv::row(os, {tab(j, 0), tab(j, 1)});
}

}  // namespace repctl
