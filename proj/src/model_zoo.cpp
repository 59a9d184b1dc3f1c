#include "repctl/model_zoo.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace repctl {

namespace {

void throw_if_any(std::vector<FieldError> errors) {
  if (!errors.empty()) throw ValidationError(std::move(errors));
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

GrowthModel GrowthModel::power_law(double gamma) {
  GrowthModel m{GrowthKind::PowerLaw, gamma, 0.0, 0.0};
  throw_if_any(check(m));
  return m;
}

GrowthModel GrowthModel::mink_seifert(double A, double C) {
  GrowthModel m{GrowthKind::MinkSeifert, 1.0, A, C};
  throw_if_any(check(m));
  return m;
}

double GrowthModel::supremum() const {
  if (kind == GrowthKind::MinkSeifert) return A + C;
  return std::numeric_limits<double>::infinity();
}

std::vector<FieldError> check(const GrowthModel& model,
                              const std::string& prefix) {
  std::vector<FieldError> errors;
  if (model.kind == GrowthKind::PowerLaw) {
    if (!finite(model.gamma) || model.gamma <= 0.0 || model.gamma > 1.0)
      errors.push_back({prefix + ".gamma", "power-law exponent must lie in (0, 1]"});
  } else {
    if (!finite(model.A) || model.A < 0.0)
      errors.push_back({prefix + ".A", "inherent value must be finite and >= 0"});
    if (!finite(model.C) || model.C < 0.0)
      errors.push_back({prefix + ".C", "reputation premium must be finite and >= 0"});
  }
  return errors;
}

double eval_growth(const GrowthModel& model, double R) {
  if (!(R >= 0.0)) throw DomainError("eval_growth: reputation must be >= 0");
  if (model.kind == GrowthKind::PowerLaw) return model.gamma == 1.0 ? R : std::pow(R, model.gamma);
  return model.A + model.C * (1.0 - 1.0 / std::log(std::numbers::e + R));
}

Eigen::ArrayXd eval_growth(const GrowthModel& model, const Eigen::ArrayXd& R) {
  if (R.size() > 0 && !(R.minCoeff() >= 0.0))
    throw DomainError("eval_growth: reputation must be >= 0");
  if (model.kind == GrowthKind::PowerLaw) return R.pow(model.gamma);
  return model.A + model.C * (1.0 - (std::numbers::e + R).log().inverse());
}

ProcessingRate ProcessingRate::linear() { return {ProcessingKind::Linear, 2.0, 1.0}; }

ProcessingRate ProcessingRate::sigmoid(double M, double c) {
  ProcessingRate r{ProcessingKind::Sigmoid, M, c};
  throw_if_any(check(r));
  return r;
}

std::vector<FieldError> check(const ProcessingRate& rate,
                              const std::string& prefix) {
  std::vector<FieldError> errors;
  if (rate.kind == ProcessingKind::Sigmoid) {
    if (!finite(rate.M) || rate.M <= 1.0)
      errors.push_back({prefix + ".M", "maximum processing rate must exceed 1"});
    if (!finite(rate.c) || rate.c <= 0.0)
      errors.push_back({prefix + ".c", "slope must be > 0"});
  }
  return errors;
}

double processing_rate(const ProcessingRate& rate, double mu) {
  if (rate.kind == ProcessingKind::Linear) {
    if (!(std::abs(mu) <= 1.0))
      throw DomainError("processing_rate: linear rate requires |mu| <= 1");
    return 1.0 - mu;
  }
  return rate.M / (1.0 + (rate.M - 1.0) * std::exp(rate.c * mu));
}

ReputationDynamics ReputationDynamics::gbm(double sigma) {
  ReputationDynamics d{DynamicsKind::GBM, sigma, 0.0};
  throw_if_any(check(d));
  return d;
}

ReputationDynamics ReputationDynamics::nerlove_arrow(double kappa, double sigma) {
  ReputationDynamics d{DynamicsKind::NerloveArrow, sigma, kappa};
  throw_if_any(check(d));
  return d;
}

std::vector<FieldError> check(const ReputationDynamics& dynamics,
                              const std::string& prefix) {
  std::vector<FieldError> errors;
  // sigma = 0 is admitted as the deterministic limit.
  if (!finite(dynamics.sigma) || dynamics.sigma < 0.0)
    errors.push_back({prefix + ".sigma", "volatility must be finite and >= 0"});
  if (dynamics.kind == DynamicsKind::NerloveArrow) {
    if (!finite(dynamics.kappa) || dynamics.kappa < 0.0)
      errors.push_back({prefix + ".kappa", "decay rate must be finite and >= 0"});
  }
  return errors;
}

ControlProblem make_problem(double T, double rho, double epsilon,
                            const ReputationDynamics& dynamics,
                            const GrowthModel& growth,
                            const ProcessingRate& processing) {
  std::vector<FieldError> errors;
  if (!finite(T) || T <= 0.0)
    errors.push_back({"horizon", "horizon must be finite and > 0"});
  if (!finite(rho) || rho < 0.0)
    errors.push_back({"rho", "discount rate must be finite and >= 0"});
  if (!finite(epsilon) || epsilon < 0.0 || epsilon >= 1.0)
    errors.push_back({"epsilon", "control bound must lie in [0, 1)"});
  for (auto& e : check(dynamics)) errors.push_back(std::move(e));
  for (auto& e : check(growth)) errors.push_back(std::move(e));
  for (auto& e : check(processing)) errors.push_back(std::move(e));
  throw_if_any(std::move(errors));

  ControlProblem p;
  p.horizon_ = T;
  p.rho_ = rho;
  p.epsilon_ = epsilon;
  p.dynamics_ = dynamics;
  p.growth_ = growth;
  p.processing_ = processing;
  p.regime_ = (dynamics.kind == DynamicsKind::GBM &&
               growth.kind == GrowthKind::PowerLaw &&
               processing.kind == ProcessingKind::Linear)
                  ? AnalyticRegime::PowerLawGbm
                  : AnalyticRegime::None;
  return p;
}

std::string to_string(GrowthKind kind) {
  return kind == GrowthKind::PowerLaw ? "PowerLaw" : "MinkSeifert";
}

std::string to_string(ProcessingKind kind) {
  return kind == ProcessingKind::Linear ? "Linear" : "Sigmoid";
}

std::string to_string(DynamicsKind kind) {
  return kind == DynamicsKind::GBM ? "GBM" : "NerloveArrow";
}

std::string to_string(AnalyticRegime regime) {
  return regime == AnalyticRegime::PowerLawGbm ? "power-law-gbm" : "none";
}

}  // namespace repctl
