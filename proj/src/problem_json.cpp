#include "repctl/problem_json.hpp"

#include <optional>

#include "json_reader.hpp"

namespace repctl {

namespace {

using nlohmann::json;
using detail::join;
using detail::Reader;

struct Parsed {
  std::optional<double> horizon, rho, epsilon;
  std::optional<ReputationDynamics> dynamics;
  std::optional<GrowthModel> growth;
  std::optional<ProcessingRate> processing;
};

std::optional<ReputationDynamics> parse_dynamics(Reader& r, const json& doc,
                                                 const std::string& path) {
  if (!r.object(doc, path, {"kind", "sigma", "kappa"})) return std::nullopt;
  auto kind = r.kind(doc, path, {"GBM", "NerloveArrow"});
  auto sigma = r.number(doc, path, "sigma", std::nullopt);
  if (!kind) return std::nullopt;
  if (*kind == "GBM") {
    if (doc.contains("kappa")) r.number(doc, path, "kappa", 0.0);
    if (!sigma) return std::nullopt;
    return ReputationDynamics{DynamicsKind::GBM, *sigma, 0.0};
  }
  auto kappa = r.number(doc, path, "kappa", std::nullopt);
  if (!sigma || !kappa) return std::nullopt;
  return ReputationDynamics{DynamicsKind::NerloveArrow, *sigma, *kappa};
}

std::optional<GrowthModel> parse_growth(Reader& r, const json& doc,
                                        const std::string& path) {
  if (!r.object(doc, path, {"kind", "gamma", "A", "C"})) return std::nullopt;
  auto kind = r.kind(doc, path, {"PowerLaw", "MinkSeifert"});
  if (!kind) return std::nullopt;
  if (*kind == "PowerLaw") {
    auto gamma = r.number(doc, path, "gamma", 1.0);
    if (!gamma) return std::nullopt;
    return GrowthModel{GrowthKind::PowerLaw, *gamma, 0.0, 0.0};
  }
  auto A = r.number(doc, path, "A", std::nullopt);
  auto C = r.number(doc, path, "C", 2.5);
  if (!A || !C) return std::nullopt;
  return GrowthModel{GrowthKind::MinkSeifert, 1.0, *A, *C};
}

std::optional<ProcessingRate> parse_processing(Reader& r, const json& doc,
                                               const std::string& path) {
  if (!r.object(doc, path, {"kind", "M", "c"})) return std::nullopt;
  auto kind = r.kind(doc, path, {"Linear", "Sigmoid"});
  if (!kind) return std::nullopt;
  if (*kind == "Linear") return ProcessingRate::linear();
  auto M = r.number(doc, path, "M", std::nullopt);
  auto c = r.number(doc, path, "c", std::nullopt);
  if (!M || !c) return std::nullopt;
  return ProcessingRate{ProcessingKind::Sigmoid, *M, *c};
}

Parsed parse(Reader& r, const json& doc, const std::string& prefix) {
  Parsed p;
  if (!r.object(doc, prefix,
                {"horizon", "rho", "epsilon", "dynamics", "growth", "processing"}))
    return p;
  p.horizon = r.number(doc, prefix, "horizon", std::nullopt);
  p.rho = r.number(doc, prefix, "rho", 0.0);
  p.epsilon = r.number(doc, prefix, "epsilon", std::nullopt);

  if (auto it = doc.find("dynamics"); it != doc.end())
    p.dynamics = parse_dynamics(r, *it, join(prefix, "dynamics"));
  else
    r.fail(join(prefix, "dynamics"), "missing required key");

  if (auto it = doc.find("growth"); it != doc.end())
    p.growth = parse_growth(r, *it, join(prefix, "growth"));
  else
    r.fail(join(prefix, "growth"), "missing required key");

  if (auto it = doc.find("processing"); it != doc.end())
    p.processing = parse_processing(r, *it, join(prefix, "processing"));
  else
    p.processing = ProcessingRate::linear();
  return p;
}

// Runs the field-level checks of make_problem without throwing.
std::optional<ControlProblem> assemble(const Parsed& p, const std::string& prefix,
                                       std::vector<FieldError>& errors) {
  if (!p.horizon || !p.rho || !p.epsilon || !p.dynamics || !p.growth ||
      !p.processing)
    return std::nullopt;
  try {
    return make_problem(*p.horizon, *p.rho, *p.epsilon, *p.dynamics, *p.growth,
                        *p.processing);
  } catch (const ValidationError& e) {
    for (const auto& fe : e.errors())
      errors.push_back({join(prefix, fe.field), fe.message});
  }
  return std::nullopt;
}

}  // namespace

json to_json(const ControlProblem& problem) {
  json dyn = {{"kind", to_string(problem.dynamics().kind)},
              {"sigma", problem.dynamics().sigma}};
  if (problem.dynamics().kind == DynamicsKind::NerloveArrow)
    dyn["kappa"] = problem.dynamics().kappa;

  const auto& g = problem.growth();
  json growth = {{"kind", to_string(g.kind)}};
  if (g.kind == GrowthKind::PowerLaw) {
    growth["gamma"] = g.gamma;
  } else {
    growth["A"] = g.A;
    growth["C"] = g.C;
  }

  const auto& pr = problem.processing();
  json proc = {{"kind", to_string(pr.kind)}};
  if (pr.kind == ProcessingKind::Sigmoid) {
    proc["M"] = pr.M;
    proc["c"] = pr.c;
  }

  return {{"horizon", problem.horizon()},
          {"rho", problem.rho()},
          {"epsilon", problem.epsilon()},
          {"dynamics", dyn},
          {"growth", growth},
          {"processing", proc}};
}

std::vector<FieldError> check_problem_json(const json& doc,
                                           const std::string& prefix) {
  std::vector<FieldError> errors;
  Reader r(errors);
  assemble(parse(r, doc, prefix), prefix, errors);
  return errors;
}

ControlProblem problem_from_json(const json& doc, const std::string& prefix) {
  std::vector<FieldError> errors;
  Reader r(errors);
  auto problem = assemble(parse(r, doc, prefix), prefix, errors);
  if (problem && errors.empty()) return *problem;
  throw ValidationError(std::move(errors));
}

}  // namespace repctl
