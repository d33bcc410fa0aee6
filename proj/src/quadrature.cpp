#include "perpetuity/quadrature.hpp"

#include <stdexcept>

namespace perp {

double expm1_over(double b, double y) {
  const double by = b * y;
  if (std::abs(by) < 1e-4) return b + b * by / 2.0 + b * by * by / 6.0;
  return std::expm1(by) / y;
}

double frullani(double a, double b) {
  if (!(a > 0.0) || b < 0.0) throw std::invalid_argument("frullani: requires a > 0 and b >= 0");
  return std::log1p(b / a);
}

}  // namespace perp
