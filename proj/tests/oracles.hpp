#ifndef REPCTL_TESTS_ORACLES_HPP
#define REPCTL_TESTS_ORACLES_HPP

// Test-only reference computations. Nothing here calls into the library.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <utility>

namespace oracle {

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      std::size_t n = 2000) {
  if (n % 2) ++n;
  const double h = (b - a) / static_cast<double>(n);
  double sum = f(a) + f(b);
  for (std::size_t i = 1; i < n; ++i) sum += f(a + h * i) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

/// Maximiser of a unimodal function on [a, b] by golden-section search.
inline std::pair<double, double> golden_max(const std::function<double(double)>& f,
                                            double a, double b, double tol = 1e-13) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  while (b - a > tol) {
    if (f(c) > f(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - g * (b - a);
    d = a + g * (b - a);
  }
  const double x = 0.5 * (a + b);
  return {x, f(x)};
}

/// Backward ODE for psi by plain explicit Euler with a tiny step; first-order
/// but free of any branch splitting.
inline double psi_euler(double gamma, double rho, double sigma, double eps, double T,
                        double t, std::size_t n) {
  const double h = (T - t) / static_cast<double>(n);
  double p = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    p += h * (1.0 - rho * p + 0.5 * sigma * sigma * gamma * (gamma - 1.0) * p +
              eps * std::abs(gamma * p - 1.0));
  return p;
}

/// Small deterministic generator for randomized property checks.
struct Lcg {
  std::uint64_t state;
  double uniform(double lo, double hi) {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    const double u = static_cast<double>(state >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }
};

}  // namespace oracle

#endif  // REPCTL_TESTS_ORACLES_HPP
