#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "repctl/model_zoo.hpp"
#include "repctl/problem_json.hpp"

using namespace repctl;
using nlohmann::json;

namespace {

bool has_field(const std::vector<FieldError>& errors, const std::string& field) {
  for (const auto& e : errors)
    if (e.field == field) return true;
  return false;
}

json gbm_doc() {
  return json::parse(R"({
    "horizon": 1, "rho": 0, "epsilon": 0.1,
    "dynamics": {"kind": "GBM", "sigma": 0.2},
    "growth": {"kind": "PowerLaw", "gamma": 1},
    "processing": {"kind": "Linear"}})");
}

}  // namespace

TEST_CASE("eval_growth examples") {
  const auto ms = GrowthModel::mink_seifert(1.0, 2.5);
  CHECK(eval_growth(ms, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  const double e = std::numbers::e;
  CHECK(eval_growth(ms, e * e - e) == doctest::Approx(2.25).epsilon(1e-14));
  CHECK(eval_growth(GrowthModel::power_law(1.0), 3.7) == 3.7);

  const double far = eval_growth(ms, 1e12);
  CHECK(far < 3.5);
  CHECK(far > 3.4);
  CHECK(eval_growth(ms, 1e300) < 3.5);
}

TEST_CASE("eval_growth rejects negative reputation") {
  CHECK_THROWS_AS(eval_growth(GrowthModel::power_law(0.5), -1e-9), DomainError);
  CHECK_THROWS_AS(eval_growth(GrowthModel::mink_seifert(1, 2.5), -1.0), DomainError);
  Eigen::ArrayXd R(3);
  R << 0.0, 1.0, -2.0;
  CHECK_THROWS_AS(eval_growth(GrowthModel::power_law(1.0), R), DomainError);
}

TEST_CASE("array eval_growth agrees with scalar") {
  const Eigen::ArrayXd R = Eigen::ArrayXd::LinSpaced(50, 0.0, 20.0);
  for (const auto& m : {GrowthModel::power_law(0.3), GrowthModel::mink_seifert(0.5, 2.5)}) {
    const Eigen::ArrayXd h = eval_growth(m, R);
    for (Eigen::Index i = 0; i < R.size(); ++i)
      CHECK(h[i] == doctest::Approx(eval_growth(m, R[i])).epsilon(1e-15));
  }
}

TEST_CASE("growth models are strictly increasing on randomized pairs") {
  oracle::Lcg rng{7};
  const GrowthModel models[] = {GrowthModel::power_law(1.0), GrowthModel::power_law(0.25),
                                GrowthModel::mink_seifert(1.0, 2.5),
                                GrowthModel::mink_seifert(0.0, 0.7)};
  for (const auto& m : models) {
    for (int k = 0; k < 2000; ++k) {
      const double r1 = rng.uniform(0.0, 50.0);
      const double r2 = r1 + rng.uniform(1e-6, 10.0);
      CHECK(eval_growth(m, r2) > eval_growth(m, r1));
    }
  }
  CHECK(eval_growth(GrowthModel::power_law(0.5), 0.0) == 0.0);
}

TEST_CASE("Mink-Seifert stays in [A, A + C)") {
  oracle::Lcg rng{11};
  const auto m = GrowthModel::mink_seifert(1.0, 2.5);
  for (int k = 0; k < 2000; ++k) {
    const double R = std::exp(rng.uniform(-10.0, 30.0));
    const double h = eval_growth(m, R);
    CHECK(h >= 1.0);
    CHECK(h < 3.5);
  }
  CHECK(m.supremum() == 3.5);
}

TEST_CASE("processing_rate examples") {
  CHECK(processing_rate(ProcessingRate::linear(), 0.1) == doctest::Approx(0.9).epsilon(1e-15));
  const auto sig = ProcessingRate::sigmoid(3.0, 1.0);
  CHECK(processing_rate(sig, 0.0) == 1.0);
  CHECK(std::abs(processing_rate(sig, -20.0) - 3.0) < 1e-6);
  CHECK(processing_rate(sig, 50.0) < 1e-20);
  CHECK_THROWS_AS(processing_rate(ProcessingRate::linear(), 1.5), DomainError);
}

TEST_CASE("sigmoid rate is strictly decreasing with p(0) = 1") {
  oracle::Lcg rng{3};
  for (int k = 0; k < 200; ++k) {
    const auto rate = ProcessingRate::sigmoid(rng.uniform(1.01, 10.0), rng.uniform(0.1, 5.0));
    CHECK(processing_rate(rate, 0.0) == 1.0);
    for (int j = 0; j < 20; ++j) {
      const double m1 = rng.uniform(-5.0, 5.0);
      const double m2 = m1 + rng.uniform(1e-3, 2.0);
      CHECK(processing_rate(rate, m2) < processing_rate(rate, m1));
    }
  }
}

TEST_CASE("linear rate within the control bound stays in [1 - eps, 1 + eps]") {
  oracle::Lcg rng{5};
  for (int k = 0; k < 1000; ++k) {
    const double eps = rng.uniform(0.0, 0.99);
    const double mu = rng.uniform(-eps, eps);
    const double p = processing_rate(ProcessingRate::linear(), mu);
    CHECK(p >= 1.0 - eps);
    CHECK(p <= 1.0 + eps);
    CHECK(p > 0.0);
    CHECK(p < 2.0);
  }
}

TEST_CASE("make_problem examples") {
  const auto p = make_problem(1.0, 0.0, 0.1, ReputationDynamics::gbm(0.2),
                              GrowthModel::power_law(1.0), ProcessingRate::linear());
  CHECK(p.regime() == AnalyticRegime::PowerLawGbm);
  CHECK(!p.dynamics().absorbing_at_zero());

  try {
    make_problem(1.0, 0.0, 1.5, ReputationDynamics::gbm(0.2), GrowthModel::power_law(1.0),
                 ProcessingRate::linear());
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    REQUIRE(e.errors().size() == 1);
    CHECK(e.errors()[0].field == "epsilon");
  }

  const auto na = make_problem(1.0, 0.0, 0.1, ReputationDynamics::nerlove_arrow(0.5, 0.3),
                               GrowthModel::mink_seifert(1.0, 2.5), ProcessingRate::linear());
  CHECK(na.regime() == AnalyticRegime::None);
  CHECK(na.dynamics().absorbing_at_zero());

  const auto sig = make_problem(1.0, 0.0, 0.1, ReputationDynamics::gbm(0.2),
                                GrowthModel::power_law(1.0), ProcessingRate::sigmoid(3, 1));
  CHECK(sig.regime() == AnalyticRegime::None);
}

TEST_CASE("make_problem reports every offending field") {
  try {
    make_problem(-1.0, -0.1, 0.1, ReputationDynamics{DynamicsKind::GBM, -0.2, 0.0},
                 GrowthModel{GrowthKind::PowerLaw, 1.5, 0, 0}, ProcessingRate::linear());
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(has_field(e.errors(), "horizon"));
    CHECK(has_field(e.errors(), "rho"));
    CHECK(has_field(e.errors(), "dynamics.sigma"));
    CHECK(has_field(e.errors(), "growth.gamma"));
    CHECK(e.errors().size() == 4);
  }
  CHECK_THROWS_AS(GrowthModel::power_law(0.0), ValidationError);
  CHECK_THROWS_AS(ProcessingRate::sigmoid(1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(ReputationDynamics::nerlove_arrow(-1.0, 0.3), ValidationError);
}

TEST_CASE("problem JSON round trip") {
  const auto p = problem_from_json(gbm_doc());
  CHECK(p.epsilon() == 0.1);
  CHECK(to_json(p) == to_json(problem_from_json(to_json(p))));

  const auto na = make_problem(2.0, 0.05, 0.2, ReputationDynamics::nerlove_arrow(0.5, 0.3),
                               GrowthModel::mink_seifert(1.0, 2.5),
                               ProcessingRate::sigmoid(3.0, 2.0));
  const auto back = problem_from_json(to_json(na));
  CHECK(to_json(back) == to_json(na));
  CHECK(back.processing().kind == ProcessingKind::Sigmoid);
  CHECK(back.dynamics().kappa == 0.5);
}

TEST_CASE("problem JSON defaults") {
  auto doc = gbm_doc();
  doc.erase("rho");
  doc.erase("processing");
  doc["growth"].erase("gamma");
  const auto p = problem_from_json(doc);
  CHECK(p.rho() == 0.0);
  CHECK(p.growth().gamma == 1.0);
  CHECK(p.processing().kind == ProcessingKind::Linear);

  const auto ms = problem_from_json(json::parse(R"({
    "horizon": 1, "epsilon": 0.1,
    "dynamics": {"kind": "NerloveArrow", "sigma": 0.3, "kappa": 0.5},
    "growth": {"kind": "MinkSeifert", "A": 1}})"));
  CHECK(ms.growth().C == 2.5);
}

TEST_CASE("problem JSON rejects unknown keys and bad values") {
  auto doc = gbm_doc();
  doc["colour"] = "red";
  doc["dynamics"]["drift"] = 1.0;
  auto errors = check_problem_json(doc);
  CHECK(has_field(errors, "colour"));
  CHECK(has_field(errors, "dynamics.drift"));
  CHECK_THROWS_AS(problem_from_json(doc), ValidationError);

  doc = gbm_doc();
  doc["epsilon"] = 1.5;
  errors = check_problem_json(doc, "problem");
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].field == "problem.epsilon");

  doc = gbm_doc();
  doc["dynamics"]["kind"] = "Levy";
  doc.erase("horizon");
  errors = check_problem_json(doc);
  CHECK(has_field(errors, "dynamics.kind"));
  CHECK(has_field(errors, "horizon"));

  doc = gbm_doc();
  doc["dynamics"] = json::parse(R"({"kind": "NerloveArrow", "sigma": 0.3})");
  errors = check_problem_json(doc);
  CHECK(has_field(errors, "dynamics.kappa"));

  CHECK(check_problem_json(gbm_doc()).empty());
  CHECK(!check_problem_json(json::array()).empty());
}
