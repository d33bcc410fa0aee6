#pragma once

#include <functional>
#include <variant>

namespace perp {

/// P{B > x} ~ a * x^c * exp(-b x) as x -> infinity.
struct GammaLikeTail {
  double a = 1.0;
  double c = 0.0;
  double b = 1.0;
};

/// P{B > x} = C exp(-b x) + r(x) for x >= 0.
///
/// `remainder_rate`, when positive, is a rate at which r(x) exp(b x) is known
/// to vanish (r(x) = O(exp(-remainder_rate x))). Zero means "not known";
/// an identically vanishing remainder is flagged by `remainder_is_zero`.
struct ExpPlusRemainderTail {
  double C = 1.0;
  double b = 1.0;
  std::function<double(double)> remainder;
  bool remainder_is_zero = false;
  double remainder_rate = 0.0;
  // Caller-asserted: exp(b x) r(x) -> 0.
  bool remainder_vanishes = false;
  // Caller-asserted: the weighted integrability of r^+ and r^- holds.
  bool remainder_integrable = false;
};

using TailModel = std::variant<GammaLikeTail, ExpPlusRemainderTail>;

inline double tail_rate(const TailModel& t) {
  return std::visit([](const auto& m) { return m.b; }, t);
}

/// Value of the tail model's leading term at x: a x^c e^{-bx} or C e^{-bx}.
double leading_term(const TailModel& t, double x);

}  // namespace perp
