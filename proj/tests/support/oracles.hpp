#pragma once

// Reference values computed without the library: textbook series, continued
// fractions and composite Simpson sums. Nothing here may call into perp::.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>

namespace oracle {

/// Regularized upper incomplete gamma Q(s, x): power series for P below
/// s + 1, modified Lentz continued fraction above.
inline double gamma_q(double s, double x) {
  if (x <= 0.0) return 1.0;
  const double log_prefactor = s * std::log(x) - x - std::lgamma(s);
  if (x < s + 1.0) {
    double term = 1.0 / s, sum = term;
    for (int n = 1; n < 1000; ++n) {
      term *= x / (s + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return 1.0 - sum * std::exp(log_prefactor);
  }
  const double tiny = 1e-300;
  double b = x + 1.0 - s, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return std::exp(log_prefactor) * h;
}

inline double gamma_density(double shape, double rate, double x) {
  if (x <= 0.0) return 0.0;
  return std::exp(shape * std::log(rate) + (shape - 1.0) * std::log(x) - rate * x - std::lgamma(shape));
}

/// Survival of Gamma(k, rate) for integer k: e^{-rate x} sum_{j<k} (rate x)^j / j!.
inline double erlang_survival(int k, double rate, double x) {
  if (x <= 0.0) return 1.0;
  double term = 1.0, sum = 0.0;
  for (int j = 0; j < k; ++j) {
    if (j > 0) term *= rate * x / j;
    sum += term;
  }
  return std::exp(-rate * x) * sum;
}

/// Composite Simpson rule with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, std::size_t n) {
  if (n % 2 == 1) ++n;
  const double h = (b - a) / static_cast<double>(n);
  double s = f(a) + f(b);
  for (std::size_t i = 1; i < n; ++i) s += f(a + h * static_cast<double>(i)) * (i % 2 == 1 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// int_0^1 (e^y - 1)/y dy = sum_{n>=1} 1/(n n!).
inline double expint_series() {
  double fact = 1.0, sum = 0.0;
  for (int n = 1; n < 30; ++n) {
    fact *= n;
    sum += 1.0 / (n * fact);
  }
  return sum;
}

/// prod_{k>=1} (1 - 2^{-k})^{-1}, summed until the factor is exactly 1.
inline double half_power_product() {
  double prod = 1.0;
  for (int k = 1; k < 80; ++k) prod /= 1.0 - std::ldexp(1.0, -k);
  return prod;
}

/// Complex log-Gamma for Re z > 0 (Lanczos, g = 7, nine coefficients).
inline std::complex<double> lgamma_complex(std::complex<double> z) {
  static constexpr double kC[9] = {0.99999999999980993,  676.5203681218851,   -1259.1392167224028,
                                   771.32342877765313,   -176.61503916999185, 12.507343278686905,
                                   -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  z -= 1.0;
  std::complex<double> x = kC[0];
  for (int i = 1; i < 9; ++i) x += kC[i] / (z + static_cast<double>(i));
  const std::complex<double> t = z + 7.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(x);
}

/// Characteristic function (b/(b-it))^{p} (a/(a+it))^{q} of
/// Gamma(p, b) - Gamma(q, a), principal branch.
inline std::complex<double> gamma_difference_cf(double p, double b, double q, double a, double t) {
  const std::complex<double> i(0.0, 1.0);
  return std::exp(-p * std::log(1.0 - i * t / b) - q * std::log(1.0 + i * t / a));
}

}  // namespace oracle
