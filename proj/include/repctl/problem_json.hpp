#ifndef REPCTL_PROBLEM_JSON_HPP
#define REPCTL_PROBLEM_JSON_HPP

#include <json.hpp>

#include <string>
#include <vector>

#include "repctl/model_zoo.hpp"

namespace repctl {

// Problem document:
//
//   { "horizon": 1, "rho": 0, "epsilon": 0.1,
//     "dynamics":   { "kind": "GBM" | "NerloveArrow", "sigma": .., "kappa": .. },
//     "growth":     { "kind": "PowerLaw" | "MinkSeifert", "gamma": .., "A": .., "C": .. },
//     "processing": { "kind": "Linear" | "Sigmoid", "M": .., "c": .. } }
//
// Unknown keys are rejected. Optional: rho (0), processing (Linear),
// growth.gamma (1), growth.C (2.5), dynamics.kappa (GBM only, ignored).

/// Canonical document with every key that applies to the instance.
nlohmann::json to_json(const ControlProblem& problem);

/// Every violation in the document, with dotted field paths under `prefix`.
std::vector<FieldError> check_problem_json(const nlohmann::json& doc,
                                           const std::string& prefix = "");

/// Throws ValidationError carrying the same list check_problem_json reports.
ControlProblem problem_from_json(const nlohmann::json& doc,
                                 const std::string& prefix = "");

}  // namespace repctl

#endif  // REPCTL_PROBLEM_JSON_HPP
