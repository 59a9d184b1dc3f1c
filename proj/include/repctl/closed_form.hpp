#ifndef REPCTL_CLOSED_FORM_HPP
#define REPCTL_CLOSED_FORM_HPP

#include <Eigen/Dense>

#include <cmath>
#include <iosfwd>
#include <optional>
#include <vector>

#include "repctl/errors.hpp"
#include "repctl/policy.hpp"

namespace repctl {

// Analytic results for the power-law price h(R) = R^gamma under GBM
// reputation and the linear processing rate 1 - mu. The value function
// separates as v(R, t) = e^{-rho t} psi(t) R^gamma with
//
//   psi'(t) = -(1 - rho psi + sigma^2 gamma (gamma - 1) psi / 2 + eps |gamma psi - 1|),
//   psi(T)  = 0,
//
// and the optimal control is eps * sgn(gamma psi(t) - 1).

namespace detail {

// (e^{a tau} - 1) / a, continuous at a = 0.
template <typename Scalar>
Scalar expm1_ratio(Scalar a, Scalar tau) {
  using std::expm1;
  if (a == Scalar(0)) return tau;
  return expm1(a * tau) / a;
}

// ln(1 + eps) / eps, continuous at eps = 0.
template <typename Scalar>
Scalar log1p_ratio(Scalar eps) {
  using std::log1p;
  if (eps == Scalar(0)) return Scalar(1);
  return log1p(eps) / eps;
}

template <typename Scalar>
void require_bound(Scalar epsilon, const char* op) {
  if (!(epsilon >= Scalar(0) && epsilon < Scalar(1)))
    throw DomainError(std::string(op) + ": epsilon must lie in [0, 1)");
}

template <typename Scalar>
void require_time(Scalar t, Scalar T, const char* op) {
  if (!(t >= Scalar(0) && t <= T))
    throw DomainError(std::string(op) + ": time outside [0, T]");
}

}  // namespace detail

/// max(0, T - ln(1 + eps) / eps): end of the advertising phase for gamma = 1,
/// rho = 0. Zero when the horizon is too short to advertise at all.
template <typename Scalar>
Scalar switch_time(Scalar epsilon, Scalar T) {
  detail::require_bound(epsilon, "switch_time");
  const Scalar s = T - detail::log1p_ratio(epsilon);
  return s > Scalar(0) ? s : Scalar(0);
}

/// psi_{1,0}(t): the separated value coefficient for gamma = 1, rho = 0.
template <typename Scalar>
Scalar psi_closed_form_10(Scalar t, Scalar epsilon, Scalar T) {
  detail::require_bound(epsilon, "psi_closed_form_10");
  detail::require_time(t, T, "psi_closed_form_10");
  const Scalar tau = T - t;
  if (t >= T - detail::log1p_ratio(epsilon))
    return (Scalar(1) + epsilon) * detail::expm1_ratio(-epsilon, tau);
  return (detail::expm1_ratio(epsilon, tau) + epsilon) / (Scalar(1) + epsilon);
}

/// Coefficient-wise psi_{1,0} over an array of times.
inline Eigen::ArrayXd psi_closed_form_10(const Eigen::ArrayXd& t, double epsilon,
                                         double T) {
  return t.unaryExpr([&](double s) { return psi_closed_form_10(s, epsilon, T); });
}

/// E[int_t^T (1 - mu) R_s ds | R_t = R] for a constant control mu under GBM
/// (gamma = 1, rho = 0): (1 - mu) R (e^{mu (T - t)} - 1) / mu.
template <typename Scalar>
Scalar expected_value_constant_mu(Scalar R, Scalar t, Scalar mu, Scalar epsilon,
                                  Scalar T) {
  using std::abs;
  detail::require_time(t, T, "expected_value_constant_mu");
  if (!(abs(mu) <= epsilon))
    throw DomainError("expected_value_constant_mu: |mu| exceeds epsilon");
  return (Scalar(1) - mu) * R * detail::expm1_ratio(mu, T - t);
}

/// Upper bound on v(R, t) from the dominating GBM with drift +eps:
///
///   (1 + eps) R^gamma int_t^T e^{-rho s} e^{(gamma eps + sigma^2 gamma (gamma - 1) / 2)(s - t)} ds.
///
/// Vanishes as R -> 0 and at t = T.
template <typename Scalar>
Scalar lemma_upper_bound(Scalar R, Scalar t, Scalar gamma, Scalar rho, Scalar sigma,
                         Scalar epsilon, Scalar T) {
  using std::exp;
  using std::pow;
  if (!(R > Scalar(0))) throw DomainError("lemma_upper_bound: R must be > 0");
  detail::require_time(t, T, "lemma_upper_bound");
  const Scalar growth =
      gamma * epsilon + Scalar(0.5) * sigma * sigma * gamma * (gamma - Scalar(1));
  return (Scalar(1) + epsilon) * pow(R, gamma) * exp(-rho * t) *
         detail::expm1_ratio(growth - rho, T - t);
}

/// Expected revenue on [0, 1] of the policy +eps on [0, t], -eps on (t, 1]
/// (gamma = 1, rho = 0, unit horizon).
template <typename Scalar>
Scalar one_switch_objective(Scalar R, Scalar t, Scalar epsilon) {
  using std::exp;
  detail::require_bound(epsilon, "one_switch_objective");
  detail::require_time(t, Scalar(1), "one_switch_objective");
  const Scalar before = (Scalar(1) - epsilon) * detail::expm1_ratio(epsilon, t);
  const Scalar after = (Scalar(1) + epsilon) * exp(epsilon * t) *
                       detail::expm1_ratio(-epsilon, Scalar(1) - t);
  return R * (before + after);
}

template <typename Scalar>
struct OneSwitchOptimum {
  Scalar t_switch;
  Scalar value_per_unit_R;
};

/// Stationary point of one_switch_objective: t1 = 1 - ln(1 + eps) / eps and
/// f(1, t1) = (e^eps + eps^2 - 1) / (eps (1 + eps)).
template <typename Scalar>
OneSwitchOptimum<Scalar> one_switch_optimum(Scalar epsilon) {
  detail::require_bound(epsilon, "one_switch_optimum");
  return {Scalar(1) - detail::log1p_ratio(epsilon),
          (detail::expm1_ratio(epsilon, Scalar(1)) + epsilon) / (Scalar(1) + epsilon)};
}

// ---------------------------------------------------------------------------
// psi as an object: closed form or RK4 grid
// ---------------------------------------------------------------------------

enum class PsiKind { ClosedForm10, NumericGrid };

class PsiSolution {
 public:
  /// The gamma = 1, rho = 0 closed form (sigma drops out).
  static PsiSolution closed_form_10(double epsilon, double T);

  double gamma() const noexcept { return gamma_; }
  double rho() const noexcept { return rho_; }
  double sigma() const noexcept { return sigma_; }
  double epsilon() const noexcept { return epsilon_; }
  double horizon() const noexcept { return T_; }
  PsiKind kind() const noexcept { return kind_; }

  /// psi(t). Grids are interpolated with cubic Hermite using the ODE slope.
  double operator()(double t) const;

  /// psi'(t) from the right-hand side of the ODE.
  double derivative(double t) const;

  /// Ascending stored times / values (NumericGrid only; empty otherwise).
  const Eigen::VectorXd& times() const noexcept { return times_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }

  /// Times where gamma psi crosses 1, ascending.
  const std::vector<double>& crossings() const noexcept { return crossings_; }

  /// Latest crossing time, if any.
  std::optional<double> switch_time() const;

  /// True when the stored grid (or a dense sample of the closed form) is
  /// strictly decreasing.
  bool strictly_decreasing() const;

  /// (t, psi) at n_steps + 1 uniform times; the stored grid when present.
  Eigen::MatrixX2d table(Eigen::Index n_steps = 1000) const;

 private:
  friend PsiSolution integrate_psi(double, double, double, double, double, double);
  PsiSolution() = default;

  double slope(double psi) const;

  double gamma_ = 1.0;
  double rho_ = 0.0;
  double sigma_ = 0.0;
  double epsilon_ = 0.0;
  double T_ = 1.0;
  PsiKind kind_ = PsiKind::ClosedForm10;
  Eigen::VectorXd times_;
  Eigen::VectorXd values_;
  std::vector<double> crossings_;
};

/// Integrates the psi ODE backward from psi(T) = 0 with classical RK4 at
/// step <= dt. A step that brackets gamma psi = 1 is split at the crossing,
/// located by bisection to 1e-12, so each sub-step sees a smooth vector field.
/// Throws IntegrationError on non-finite values.
PsiSolution integrate_psi(double gamma, double rho, double sigma, double epsilon,
                          double T, double dt);

/// e^{-rho t} psi(t) R^gamma. Throws DomainError for R <= 0 or t outside [0, T].
double value_power_law(double R, double t, const PsiSolution& psi);

/// eps * sgn(gamma psi(t) - 1), ties to -eps.
PulsingPolicy optimal_pulsing_policy(const PsiSolution& psi);

/// CSV with columns (t, psi), 17 significant digits.
void write_csv(std::ostream& os, const PsiSolution& psi, Eigen::Index n_steps = 1000);

}  // namespace repctl

#endif  // REPCTL_CLOSED_FORM_HPP
