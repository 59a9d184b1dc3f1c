#ifndef REPCTL_MODEL_ZOO_HPP
#define REPCTL_MODEL_ZOO_HPP

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "repctl/errors.hpp"

namespace repctl {

// ---------------------------------------------------------------------------
// Price per unit h(R)
// ---------------------------------------------------------------------------

enum class GrowthKind { PowerLaw, MinkSeifert };

/// Price per unit as a function of reputation.
///
///   PowerLaw:     h(R) = R^gamma,                     gamma in (0, 1]
///   MinkSeifert:  h(R) = A + C (1 - 1 / ln(e + R)),   A, C >= 0
///
/// The Mink-Seifert curve starts at A and saturates towards A + C without
/// reaching it.
struct GrowthModel {
  GrowthKind kind = GrowthKind::PowerLaw;
  double gamma = 1.0;
  double A = 0.0;
  double C = 0.0;

  static GrowthModel power_law(double gamma);
  static GrowthModel mink_seifert(double A, double C = 2.5);

  /// Upper bound of h over R >= 0, or +inf for the power law.
  double supremum() const;
};

std::vector<FieldError> check(const GrowthModel& model,
                              const std::string& prefix = "growth");

/// h(R). Throws DomainError for negative R.
double eval_growth(const GrowthModel& model, double R);

/// Coefficient-wise h over an array of reputations.
Eigen::ArrayXd eval_growth(const GrowthModel& model, const Eigen::ArrayXd& R);

// ---------------------------------------------------------------------------
// Processing rate p(mu)
// ---------------------------------------------------------------------------

enum class ProcessingKind { Linear, Sigmoid };

/// Fraction of the nominal sales volume processed under control mu.
///
///   Linear:   p(mu) = 1 - mu
///   Sigmoid:  p(mu) = M / (1 + (M - 1) e^{c mu}),   M > 1, c > 0
///
/// The sigmoid family has p(0) = 1, p -> 0 as mu -> +inf and p -> M as
/// mu -> -inf.
struct ProcessingRate {
  ProcessingKind kind = ProcessingKind::Linear;
  double M = 2.0;
  double c = 1.0;

  static ProcessingRate linear();
  static ProcessingRate sigmoid(double M, double c);
};

std::vector<FieldError> check(const ProcessingRate& rate,
                              const std::string& prefix = "processing");

/// p(mu). Under the linear rate |mu| must not exceed 1 (DomainError).
double processing_rate(const ProcessingRate& rate, double mu);

// ---------------------------------------------------------------------------
// Reputation dynamics
// ---------------------------------------------------------------------------

enum class DynamicsKind { GBM, NerloveArrow };

/// SDE family driving the reputation:
///
///   GBM:           dR = R (mu dt + sigma dB)
///   NerloveArrow:  dR = (mu - kappa R) dt + sigma dB, stopped at R = 0
struct ReputationDynamics {
  DynamicsKind kind = DynamicsKind::GBM;
  double sigma = 0.2;
  double kappa = 0.0;

  static ReputationDynamics gbm(double sigma);
  static ReputationDynamics nerlove_arrow(double kappa, double sigma);

  bool absorbing_at_zero() const noexcept {
    return kind == DynamicsKind::NerloveArrow;
  }
};

std::vector<FieldError> check(const ReputationDynamics& dynamics,
                              const std::string& prefix = "dynamics");

// ---------------------------------------------------------------------------
// Control problem
// ---------------------------------------------------------------------------

/// Which closed-form results apply to a problem instance.
enum class AnalyticRegime {
  None,
  /// GBM dynamics, power-law price, linear processing rate.
  PowerLawGbm,
};

/// One fully specified optimization instance. Immutable; build with
/// make_problem().
class ControlProblem {
 public:
  double horizon() const noexcept { return horizon_; }
  double rho() const noexcept { return rho_; }
  double epsilon() const noexcept { return epsilon_; }
  const ReputationDynamics& dynamics() const noexcept { return dynamics_; }
  const GrowthModel& growth() const noexcept { return growth_; }
  const ProcessingRate& processing() const noexcept { return processing_; }
  AnalyticRegime regime() const noexcept { return regime_; }

  /// Running revenue (1 - mu) h(R) generalised to p(mu) h(R).
  double revenue_rate(double R, double mu) const {
    return processing_rate(processing_, mu) * eval_growth(growth_, R);
  }

 private:
  friend ControlProblem make_problem(double, double, double,
                                     const ReputationDynamics&,
                                     const GrowthModel&, const ProcessingRate&);
  ControlProblem() = default;

  double horizon_ = 1.0;
  double rho_ = 0.0;
  double epsilon_ = 0.1;
  ReputationDynamics dynamics_;
  GrowthModel growth_;
  ProcessingRate processing_;
  AnalyticRegime regime_ = AnalyticRegime::None;
};

/// Validates every field and throws ValidationError listing all violations.
ControlProblem make_problem(double T, double rho, double epsilon,
                            const ReputationDynamics& dynamics,
                            const GrowthModel& growth,
                            const ProcessingRate& processing);

std::string to_string(GrowthKind kind);
std::string to_string(ProcessingKind kind);
std::string to_string(DynamicsKind kind);
std::string to_string(AnalyticRegime regime);

}  // namespace repctl

#endif  // REPCTL_MODEL_ZOO_HPP
