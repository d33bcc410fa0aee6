#pragma once

// Adaptive Gauss-Kronrod (7/15) quadrature for real and complex integrands.
//
// Complex integrands share one panel subdivision for their real and imaginary
// parts: the per-panel error is |K15 - G7| measured in the complex modulus.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <type_traits>
#include <utility>
#include <vector>

namespace perp {

template <class T>
struct QuadResult {
  T value{};
  double abs_error_estimate = 0.0;
  std::size_t subdivisions = 0;
  bool converged = false;
};

inline constexpr std::size_t kDefaultMaxPanels = 10000;

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for nodes kKronrodNodes[1], [3], [5], [7].
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class T>
struct Panel {
  double a;
  double b;
  T value;
  double error;
};

template <class T>
bool is_finite_value(const T& v) {
  if constexpr (std::is_same_v<T, double>) {
    return std::isfinite(v);
  } else {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  }
}

template <class T, class F>
Panel<T> gauss_kronrod15(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const T fc = f(center);
  T kronrod = fc * kKronrodWeights[7];
  T gauss = fc * kGaussWeights[3];
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const T f1 = f(center - dx);
    const T f2 = f(center + dx);
    kronrod += (f1 + f2) * kKronrodWeights[j];
    if (j % 2 == 1) gauss += (f1 + f2) * kGaussWeights[j / 2];
  }
  kronrod *= half;
  gauss *= half;
  double err = std::abs(kronrod - gauss);
  if (!is_finite_value(kronrod)) err = std::numeric_limits<double>::infinity();
  return {a, b, kronrod, err};
}

}  // namespace detail

/// Integrates f over [lo, hi] to absolute tolerance `tol`, bisecting the panel
/// with the largest error until the summed error estimate meets `tol` or the
/// panel cap is reached. The integration starts from `initial_panels` equal
/// panels. Endpoints are never evaluated.
template <class F>
auto integrate_finite(F&& f, double lo, double hi, double tol, std::size_t initial_panels = 1,
                      std::size_t max_panels = kDefaultMaxPanels)
    -> QuadResult<std::invoke_result_t<F&, double>> {
  using T = std::invoke_result_t<F&, double>;
  using detail::Panel;
  QuadResult<T> out;
  if (!(hi > lo)) {
    out.converged = (hi == lo);
    return out;
  }
  initial_panels = std::clamp<std::size_t>(initial_panels, 1, max_panels);
  auto by_error = [](const Panel<T>& x, const Panel<T>& y) { return x.error < y.error; };

  std::vector<Panel<T>> heap;
  heap.reserve(initial_panels + 64);
  const double width = (hi - lo) / static_cast<double>(initial_panels);
  for (std::size_t i = 0; i < initial_panels; ++i) {
    const double a = lo + width * static_cast<double>(i);
    const double b = (i + 1 == initial_panels) ? hi : a + width;
    heap.push_back(detail::gauss_kronrod15<T>(f, a, b));
  }
  std::make_heap(heap.begin(), heap.end(), by_error);

  auto total_error = [&] {
    double e = 0.0;
    for (const auto& p : heap) e += p.error;
    return e;
  };

  double err = total_error();
  while (err > tol && heap.size() < max_panels) {
    std::pop_heap(heap.begin(), heap.end(), by_error);
    const Panel<T> worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Panel cannot be split further in floating point.
      heap.push_back(worst);
      std::push_heap(heap.begin(), heap.end(), by_error);
      break;
    }
    Panel<T> left = detail::gauss_kronrod15<T>(f, worst.a, mid);
    Panel<T> right = detail::gauss_kronrod15<T>(f, mid, worst.b);
    err += left.error + right.error - worst.error;
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end(), by_error);
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end(), by_error);
    if (!std::isfinite(err) || err <= tol) err = total_error();
  }

  // Sum in position order so the result does not depend on heap layout.
  std::sort(heap.begin(), heap.end(), [](const Panel<T>& x, const Panel<T>& y) { return x.a < y.a; });
  T sum{};
  for (const auto& p : heap) sum += p.value;
  out.value = sum;
  out.abs_error_estimate = total_error();
  out.subdivisions = heap.size();
  out.converged = std::isfinite(out.abs_error_estimate) && out.abs_error_estimate <= tol;
  return out;
}

/// Integrates f over [lo, infinity) for integrands decaying at least like
/// exp(-decay_hint * y). The truncation point T is the first probe (step
/// 1/decay_hint) after which |f| stays below tol*1e-3 at three consecutive
/// probes; the remainder beyond T is bounded by |f(T)|/decay_hint and added to
/// the error estimate. If decay is not seen by lo + 1e4/decay_hint the result
/// is returned unconverged.
template <class F>
auto integrate_semi_infinite(F&& f, double lo, double tol, double decay_hint)
    -> QuadResult<std::invoke_result_t<F&, double>> {
  using T = std::invoke_result_t<F&, double>;
  const double step = 1.0 / decay_hint;
  const double threshold = tol * 1e-3;
  const double limit = lo + 1e4 / decay_hint;

  double y = lo;
  int below = 0;
  bool found = false;
  double f_at_cut = 0.0;
  while (y <= limit) {
    y += step;
    const double v = std::abs(f(y));
    if (v < threshold) {
      if (++below == 3) {
        found = true;
        f_at_cut = v;
        break;
      }
    } else {
      below = 0;
    }
  }
  const double cut = found ? y : limit;
  const double tail_bound = f_at_cut / decay_hint;
  const double finite_tol = std::max(tol - tail_bound, 0.5 * tol);
  const auto panels = static_cast<std::size_t>(std::clamp(std::ceil((cut - lo) / step), 1.0, 512.0));
  QuadResult<T> out = integrate_finite(f, lo, cut, finite_tol, panels);
  out.abs_error_estimate += tail_bound;
  out.converged = found && out.converged && out.abs_error_estimate <= tol;
  return out;
}

/// Integrates f over [lo, infinity) through the substitution y = lo + t/(1-t).
/// Suited to algebraically decaying integrands where no exponential decay rate
/// is known.
template <class F>
auto integrate_to_infinity(F&& f, double lo, double tol)
    -> QuadResult<std::invoke_result_t<F&, double>> {
  using T = std::invoke_result_t<F&, double>;
  auto mapped = [&](double t) -> T {
    const double s = 1.0 - t;
    return f(lo + t / s) / (s * s);
  };
  return integrate_finite(mapped, 0.0, 1.0, tol, 4);
}

/// Integrates f over (-infinity, hi] through y = hi - t/(1-t).
template <class F>
auto integrate_from_minus_infinity(F&& f, double hi, double tol)
    -> QuadResult<std::invoke_result_t<F&, double>> {
  using T = std::invoke_result_t<F&, double>;
  auto mapped = [&](double t) -> T {
    const double s = 1.0 - t;
    return f(hi - t / s) / (s * s);
  };
  return integrate_finite(mapped, 0.0, 1.0, tol, 4);
}

/// Integrates f over [lo, hi] where either end may be infinite.
template <class F>
auto integrate_interval(F&& f, double lo, double hi, double tol)
    -> QuadResult<std::invoke_result_t<F&, double>> {
  using T = std::invoke_result_t<F&, double>;
  const bool lo_inf = std::isinf(lo);
  const bool hi_inf = std::isinf(hi);
  if (!lo_inf && !hi_inf) return integrate_finite(f, lo, hi, tol, 4);
  if (!lo_inf) return integrate_to_infinity(f, lo, tol);
  if (!hi_inf) return integrate_from_minus_infinity(f, hi, tol);
  QuadResult<T> left = integrate_from_minus_infinity(f, 0.0, 0.5 * tol);
  QuadResult<T> right = integrate_to_infinity(f, 0.0, 0.5 * tol);
  QuadResult<T> out;
  out.value = left.value + right.value;
  out.abs_error_estimate = left.abs_error_estimate + right.abs_error_estimate;
  out.subdivisions = left.subdivisions + right.subdivisions;
  out.converged = left.converged && right.converged;
  return out;
}

/// (exp(b*y) - 1) / y, with the removable singularity at y = 0 resolved by the
/// series b + b^2 y / 2 + b^3 y^2 / 6 when |b*y| < 1e-4.
double expm1_over(double b, double y);

/// Closed form of the integral over (0, inf) of (exp(-a y) - exp(-(a+b) y)) / y,
/// i.e. log((a+b)/a).
double frullani(double a, double b);

}  // namespace perp
