#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "repctl/closed_form.hpp"

using namespace repctl;

namespace {

// Reference values evaluated at 30 digits (mpmath).
constexpr double kTStar = 0.046898201956751399560;      // 1 - ln(1.1)/0.1
constexpr double kPsi0 = 1.0470083461422511347;         // psi_{1,0}(0), eps=0.1, T=1
constexpr double kConstMinus = 1.0467884016044446952;   // f(1, 0), eps = 0.1
constexpr double kConstPlusR2 = 1.8930765253616572466;  // 2 * 0.9 (e^0.1 - 1)/0.1
constexpr double kOneSwitchAt1 = 0.94653826268082862331;
constexpr double kBound = 1.1568800988321238729;        // 1.1 (e^0.1 - 1)/0.1
constexpr double kPsiGammaHalf = 1.0442192871915031024; // gamma=.5 rho=.05 sigma=.2 eps=.1
constexpr double kPsiGammaHalfRho0 = 1.0702970409303226100;

}  // namespace

TEST_CASE("psi_closed_form_10 examples") {
  CHECK(psi_closed_form_10(1.0, 0.1, 1.0) == 0.0);
  CHECK(psi_closed_form_10(kTStar, 0.1, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(psi_closed_form_10(0.0, 0.1, 1.0) == doctest::Approx(kPsi0).epsilon(1e-15));
  CHECK_THROWS_AS(psi_closed_form_10(-0.1, 0.1, 1.0), DomainError);
  CHECK_THROWS_AS(psi_closed_form_10(1.1, 0.1, 1.0), DomainError);
}

TEST_CASE("psi_closed_form_10 agrees with a first-order Euler oracle") {
  for (double eps : {0.05, 0.3}) {
    for (double t : {0.0, 0.3, 0.9}) {
      const double ref = oracle::psi_euler(1.0, 0.0, 0.0, eps, 1.0, t, 400000);
      CHECK(psi_closed_form_10(t, eps, 1.0) == doctest::Approx(ref).epsilon(1e-5));
    }
  }
}

TEST_CASE("closed-form branches agree at the switch time") {
  oracle::Lcg rng{17};
  for (int k = 0; k < 500; ++k) {
    const double eps = rng.uniform(1e-3, 0.9);
    const double L = std::log1p(eps) / eps;
    const double T = rng.uniform(L + 1e-6, 10.0);
    const double ts = T - L;
    const double upper = (1 + eps) / eps * (1 - std::exp(-eps * (T - ts)));
    const double lower = (std::exp(eps * (T - ts)) - (1 - eps * eps)) / (eps * (1 + eps));
    CHECK(std::abs(upper - lower) <= 1e-12);
    CHECK(std::abs(psi_closed_form_10(ts, eps, T) - 1.0) <= 1e-12);
  }
}

TEST_CASE("switch_time examples") {
  CHECK(switch_time(0.1, 1.0) == doctest::Approx(kTStar).epsilon(1e-14));
  CHECK(switch_time(0.1, 0.5) == 0.0);
  CHECK(switch_time(1e-9, 2.0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(switch_time(0.0, 2.0) == 1.0);
}

TEST_CASE("value_power_law examples") {
  const auto cf = PsiSolution::closed_form_10(0.1, 1.0);
  CHECK(value_power_law(1.0, 1.0, cf) == 0.0);
  CHECK(value_power_law(2.0, 0.0, cf) == doctest::Approx(2 * kPsi0).epsilon(1e-15));
  CHECK_THROWS_AS(value_power_law(0.0, 0.0, cf), DomainError);

  const auto num = integrate_psi(0.5, 0.0, 0.2, 0.1, 1.0, 1e-4);
  CHECK(value_power_law(4.0, 0.0, num) == doctest::Approx(2 * num(0.0)).epsilon(1e-15));
  CHECK(num(0.0) == doctest::Approx(kPsiGammaHalfRho0).epsilon(1e-12));
}

TEST_CASE("integrate_psi reproduces the closed form") {
  const auto num = integrate_psi(1.0, 0.0, 0.7, 0.1, 1.0, 1e-4);
  REQUIRE(num.kind() == PsiKind::NumericGrid);
  double sup = 0.0;
  for (Eigen::Index j = 0; j < num.times().size(); ++j)
    sup = std::max(sup, std::abs(num.values()[j] - psi_closed_form_10(num.times()[j], 0.1, 1.0)));
  CHECK(sup <= 1e-8);
  REQUIRE(num.switch_time());
  CHECK(std::abs(*num.switch_time() - kTStar) <= 1e-10);

  // Off-grid interpolation.
  for (double t : {0.01234, 0.0468, 0.5555, 0.99999})
    CHECK(std::abs(num(t) - psi_closed_form_10(t, 0.1, 1.0)) <= 1e-9);
}

TEST_CASE("integrate_psi degenerate and general cases") {
  const auto flat = integrate_psi(1.0, 0.0, 0.3, 0.0, 2.0, 1e-3);
  for (Eigen::Index j = 0; j < flat.times().size(); ++j)
    CHECK(flat.values()[j] == doctest::Approx(2.0 - flat.times()[j]).epsilon(1e-12));

  const auto g = integrate_psi(0.5, 0.05, 0.2, 0.1, 1.0, 1e-3);
  CHECK(g.values()[g.values().size() - 1] == 0.0);
  CHECK(g.strictly_decreasing());
  CHECK(g(0.0) == doctest::Approx(kPsiGammaHalf).epsilon(1e-11));
  CHECK(g.crossings().empty());  // gamma psi stays below 1

  CHECK_THROWS_AS(integrate_psi(1.0, 0.0, 0.2, 0.1, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(integrate_psi(1.5, 0.0, 0.2, 0.1, 1.0, 1e-3), DomainError);
}

TEST_CASE("integrate_psi matches an Euler oracle when gamma < 1 crosses") {
  // Long horizon so that gamma psi exceeds 1.
  const auto g = integrate_psi(0.6, 0.02, 0.25, 0.2, 4.0, 1e-3);
  REQUIRE(g.switch_time());
  for (double t : {0.0, 1.0, 2.5})
    CHECK(g(t) == doctest::Approx(oracle::psi_euler(0.6, 0.02, 0.25, 0.2, 4.0, t, 400000))
                       .epsilon(1e-5));
  CHECK(0.6 * g(*g.switch_time()) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("optimal_pulsing_policy examples") {
  const auto p1 = optimal_pulsing_policy(integrate_psi(1.0, 0.0, 0.2, 0.1, 1.0, 1e-4));
  REQUIRE(p1.switch_times.size() == 1);
  CHECK(std::abs(p1.switch_times[0] - kTStar) <= 1e-10);
  CHECK(p1.initial_sign == +1);
  CHECK(p1.control(0.0) == 0.1);
  CHECK(p1.control(0.04) == 0.1);
  CHECK(p1.control(0.05) == -0.1);
  CHECK(p1.control(1.0) == -0.1);

  const auto p2 = optimal_pulsing_policy(PsiSolution::closed_form_10(0.1, 0.5));
  CHECK(p2.switch_times.empty());
  CHECK(p2.control(0.0) == -0.1);
  CHECK(p2.control(0.5) == -0.1);

  const auto p3 = optimal_pulsing_policy(PsiSolution::closed_form_10(0.1, 1.0));
  CHECK(p3.switch_times[0] == doctest::Approx(kTStar).epsilon(1e-14));
  CHECK(p3.control(p3.switch_times[0]) == -0.1);  // tie goes to processing
}

TEST_CASE("expected_value_constant_mu examples") {
  const double ts = switch_time(0.1, 1.0);
  CHECK(std::abs(expected_value_constant_mu(1.0, ts, -0.1, 0.1, 1.0) -
                 psi_closed_form_10(ts, 0.1, 1.0)) <= 1e-12);
  CHECK(expected_value_constant_mu(1.0, 0.0, 0.0, 0.1, 1.0) == 1.0);
  CHECK(expected_value_constant_mu(2.0, 0.0, 0.1, 0.1, 1.0) ==
        doctest::Approx(kConstPlusR2).epsilon(1e-15));
  CHECK_THROWS_AS(expected_value_constant_mu(1.0, 0.0, 0.2, 0.1, 1.0), DomainError);

  // Quadrature of (1 - mu) R e^{mu s}.
  for (double mu : {-0.1, 0.05, 0.1}) {
    const double q = oracle::simpson([&](double s) { return (1 - mu) * 2.0 * std::exp(mu * s); },
                                     0.0, 0.7);
    CHECK(expected_value_constant_mu(2.0, 0.3, mu, 0.1, 1.0) == doctest::Approx(q).epsilon(1e-12));
  }
}

TEST_CASE("verification identity on [t*, T]") {
  oracle::Lcg rng{23};
  for (int k = 0; k < 300; ++k) {
    const double eps = rng.uniform(0.01, 0.9);
    const double T = rng.uniform(0.1, 5.0);
    const double ts = switch_time(eps, T);
    const double t = rng.uniform(ts, T);
    const double R = rng.uniform(0.01, 10.0);
    const auto cf = PsiSolution::closed_form_10(eps, T);
    CHECK(expected_value_constant_mu(R, t, -eps, eps, T) ==
          doctest::Approx(value_power_law(R, t, cf)).epsilon(1e-12));
  }
}

TEST_CASE("lemma_upper_bound examples and domination") {
  CHECK(lemma_upper_bound(1.0, 0.0, 1.0, 0.0, 0.2, 0.1, 1.0) ==
        doctest::Approx(kBound).epsilon(1e-15));
  CHECK(lemma_upper_bound(1.0, 1.0, 1.0, 0.0, 0.2, 0.1, 1.0) == 0.0);
  CHECK(lemma_upper_bound(1e-12, 0.0, 0.5, 0.0, 0.2, 0.1, 1.0) < 1e-5);
  CHECK(lemma_upper_bound(1e-300, 0.0, 1.0, 0.0, 0.2, 0.1, 1.0) < 1e-299);

  // Zero net exponent: gamma eps + sigma^2 gamma (gamma - 1)/2 = rho.
  const double g = 0.5;
  const double exact_rho = g * 0.1 + 0.5 * 0.04 * g * (g - 1.0);
  const double q = oracle::simpson(
      [&](double s) { return 1.1 * std::exp(-exact_rho * s) * std::exp(exact_rho * s); }, 0.0, 1.0);
  CHECK(lemma_upper_bound(1.0, 0.0, g, exact_rho, 0.2, 0.1, 1.0) ==
        doctest::Approx(q).epsilon(1e-12));

  oracle::Lcg rng{29};
  for (int k = 0; k < 300; ++k) {
    const double gamma = rng.uniform(0.1, 1.0);
    const double r = rng.uniform(0.0, 0.2);
    const double sigma = rng.uniform(0.0, 0.5);
    const double eps = rng.uniform(0.01, 0.5);
    const double T = rng.uniform(0.2, 3.0);
    const auto psi = integrate_psi(gamma, r, sigma, eps, T, 1e-3);
    const double t = rng.uniform(0.0, T);
    const double R = std::exp(rng.uniform(-5.0, 3.0));
    const double bound = lemma_upper_bound(R, t, gamma, r, sigma, eps, T);
    CHECK(bound >= value_power_law(R, t, psi) * (1 - 1e-12));
    const double quad = oracle::simpson(
        [&](double s) {
          return (1 + eps) * std::pow(R, gamma) * std::exp(-r * s) *
                 std::exp((gamma * eps + 0.5 * sigma * sigma * gamma * (gamma - 1)) * (s - t));
        },
        t, T);
    CHECK(bound == doctest::Approx(quad).epsilon(1e-10));
  }
}

TEST_CASE("one_switch_objective examples") {
  const double t1 = 1.0 - std::log(1.1) / 0.1;
  CHECK(one_switch_objective(1.0, 0.0, 0.1) == doctest::Approx(kConstMinus).epsilon(1e-15));
  CHECK(one_switch_objective(1.0, 1.0, 0.1) == doctest::Approx(kOneSwitchAt1).epsilon(1e-15));
  CHECK(one_switch_objective(1.0, t1, 0.1) == doctest::Approx(kPsi0).epsilon(1e-14));
  CHECK(one_switch_objective(3.0, t1, 0.1) == doctest::Approx(3 * kPsi0).epsilon(1e-14));
  CHECK_THROWS_AS(one_switch_objective(1.0, 1.2, 0.1), DomainError);

  // Direct quadrature of the expected integrand.
  for (double t : {0.0, 0.2, 0.77, 1.0}) {
    const double eps = 0.3;
    const double q = oracle::simpson([&](double s) { return (1 - eps) * std::exp(eps * s); }, 0.0, t) +
                     oracle::simpson(
                         [&](double s) {
                           return (1 + eps) * std::exp(eps * t) * std::exp(-eps * (s - t));
                         },
                         t, 1.0);
    CHECK(one_switch_objective(1.0, t, eps) == doctest::Approx(q).epsilon(1e-12));
  }
}

TEST_CASE("one_switch_optimum examples") {
  const auto o = one_switch_optimum(0.1);
  CHECK(o.t_switch == doctest::Approx(kTStar).epsilon(1e-14));
  CHECK(o.value_per_unit_R == doctest::Approx(kPsi0).epsilon(1e-15));
  CHECK(one_switch_optimum(0.5).t_switch ==
        doctest::Approx(0.18906978378367123604).epsilon(1e-14));

  const double e = 0.1;
  CHECK(one_switch_objective(1.0, 1.0, e) < one_switch_objective(1.0, 0.0, e));
  CHECK(one_switch_objective(1.0, 0.0, e) < one_switch_objective(1.0, o.t_switch, e));
}

TEST_CASE("one_switch_optimum is the maximiser found by golden section") {
  for (double eps : {0.05, 0.2, 0.6, 0.9}) {
    const auto [x, fx] = oracle::golden_max(
        [&](double t) { return one_switch_objective(1.0, t, eps); }, 0.0, 1.0);
    const auto o = one_switch_optimum(eps);
    CHECK(std::abs(x - o.t_switch) < 1e-6);
    CHECK(fx == doctest::Approx(o.value_per_unit_R).epsilon(1e-13));
  }
}

TEST_CASE("cross-module identities for random epsilon") {
  oracle::Lcg rng{31};
  for (int k = 0; k < 200; ++k) {
    const double eps = rng.uniform(1e-6, 0.9);
    const auto o = one_switch_optimum(eps);
    CHECK(std::abs(o.t_switch - switch_time(eps, 1.0)) <= 1e-12);
    CHECK(std::abs(o.value_per_unit_R - psi_closed_form_10(0.0, eps, 1.0)) <= 1e-12);
  }
}

TEST_CASE("epsilon -> 0 limit") {
  // sup_t |psi - (T - t)| / eps stays bounded as eps halves.
  double previous_k = 0.0;
  for (double eps = 0.2; eps > 1e-4; eps /= 2) {
    double sup = 0.0;
    for (int j = 0; j <= 200; ++j) {
      const double t = 2.0 * j / 200.0;
      sup = std::max(sup, std::abs(psi_closed_form_10(t, eps, 2.0) - (2.0 - t)));
    }
    const double k = sup / eps;
    CHECK(k <= 2.0);
    if (previous_k > 0.0) CHECK(k <= previous_k * 1.01);
    previous_k = k;
  }
}

TEST_CASE("psi CSV export") {
  std::ostringstream os;
  write_csv(os, PsiSolution::closed_form_10(0.1, 1.0), 4);
  CHECK(os.str() ==
        "t,psi\n"
        "0,1.047008346142251\n"
        "0.25,0.79482165038591823\n"
        "0.5,0.53647633049214594\n"
        "0.75,0.27159096768834068\n"
        "1,0\n");
}
