#include "perpetuity/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "perpetuity/quadrature.hpp"

namespace perp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

Distribution make(DistributionVariant v) {
  return Distribution(std::make_shared<const DistributionNode>(DistributionNode{std::move(v)}));
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

// Kummer's M(a; b; z) for real z by its power series; negative arguments use
// M(a; b; z) = e^z M(b - a; b; -z) so all terms are positive.
double kummer_real(double a, double b, double z) {
  if (z < 0.0) return std::exp(z) * kummer_real(b - a, b, -z);
  double term = 1.0;
  double sum = 1.0;
  for (int n = 0; n < 100000; ++n) {
    term *= (a + n) / (b + n) * z / (n + 1);
    sum += term;
    if (!std::isfinite(sum)) return kInf;
    if (term <= 1e-17 * sum && n > z) break;
  }
  return sum;
}

std::complex<double> kummer_imag(double a, double b, double t) {
  const std::complex<double> z(0.0, t);
  std::complex<double> term = 1.0;
  std::complex<double> sum = 1.0;
  for (int n = 0; n < 10000; ++n) {
    term *= (a + n) / (b + n) / (n + 1.0) * z;
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum) && n > std::abs(t)) break;
  }
  return sum;
}

constexpr double kInverseStep = 1.0 / 32.0;

std::shared_ptr<const InversionTable> build_table(const std::function<double(double)>& s, double lo) {
  double span = 1.0;
  while (s(lo + span) > 1e-300 && span < 1e12) span *= 2.0;
  // Last point with strictly positive survival.
  double x_end = lo + span;
  while (!(s(x_end) > 0.0) && x_end > lo) x_end = lo + 0.5 * (x_end - lo);
  const double y_end = -std::log(s(x_end));

  auto table = std::make_shared<InversionTable>();
  table->y_step = kInverseStep;
  table->x.push_back(lo);
  // Walk forward; each quantile is bracketed by the previous one and a
  // doubling step.
  double left = lo;
  for (std::size_t i = 1; static_cast<double>(i) * kInverseStep < y_end; ++i) {
    const double y = static_cast<double>(i) * kInverseStep;
    auto g = [&](double x) { return -std::log(s(x)) - y; };
    double step = std::max(1e-3, table->x.size() > 1 ? 2.0 * (left - table->x[table->x.size() - 2]) : 1e-3);
    double right = std::min(x_end, left + step);
    while (g(right) < 0.0 && right < x_end) {
      step *= 2.0;
      right = std::min(x_end, left + step);
    }
    double xi = right;
    const double gl = g(left);
    const double gr = g(right);
    if (gl >= 0.0) {
      xi = left;
    } else if (gr > 0.0 && std::isfinite(gr)) {
      std::uintmax_t iters = 200;
      auto tol = [](double l, double r) { return r - l <= 1e-14 * std::max(1.0, std::abs(l)); };
      const auto root = boost::math::tools::toms748_solve(g, left, right, gl, gr, tol, iters);
      xi = 0.5 * (root.first + root.second);
    }
    table->x.push_back(xi);
    left = xi;
  }
  table->x.push_back(x_end);
  return table;
}

void validate_survival(const std::function<double(double)>& s, double lo) {
  require(std::isfinite(lo), "survival_defined: support_lo must be finite");
  require(std::abs(s(lo) - 1.0) <= 1e-12, "survival_defined: S(support_lo) must equal 1");
  double prev = 1.0;
  double x = lo;
  for (int i = 1; i <= 4000; ++i) {
    x = lo + 0.01 * i;
    const double v = s(x);
    require(v >= 0.0 && v <= 1.0 + 1e-15, "survival_defined: S must take values in [0,1]");
    require(v <= prev + 1e-15, "survival_defined: S must be nonincreasing");
    prev = v;
  }
  for (double t = 64.0; t <= 1e9; t *= 2.0) {
    const double v = s(lo + t);
    require(v <= prev + 1e-15, "survival_defined: S must be nonincreasing");
    prev = v;
  }
  require(prev < 1e-3, "survival_defined: S must tend to 0");
}

// Solves S(x) = u: cubic interpolation of the tabulated quantile function in
// y = -log u, one Newton step on -log S, and a bracketed solve when the
// step leaves the table bracket.
double invert_survival(const SurvivalDefined& sd, double u) {
  const InversionTable& t = *sd.table;
  const double y = -std::log(u);
  if (y <= 0.0) return sd.support_lo;
  const double h = t.y_step;
  const std::size_t n = t.x.size();
  const auto i = static_cast<std::size_t>(y / h);
  if (i + 2 >= n) {
    // Beyond the last interior node: plain bracketed solve.
    auto g = [&](double x) { return -std::log(sd.survival(x)) - y; };
    const double a = t.x[std::min(i, n - 2)];
    const double b = t.x[n - 1];
    const double ga = g(a);
    const double gb = g(b);
    if (ga >= 0.0) return a;
    if (!(gb > 0.0) || !std::isfinite(gb)) return b;
    std::uintmax_t iters = 100;
    auto tol = [](double l, double r) { return r - l <= 1e-13 * std::max(1.0, std::abs(l)); };
    const auto root = boost::math::tools::toms748_solve(g, a, b, ga, gb, tol, iters);
    return 0.5 * (root.first + root.second);
  }
  const double a = t.x[i];
  const double b = t.x[i + 1];
  const std::size_t j = i == 0 ? 0 : i - 1;  // stencil j..j+3
  const double s = (y - h * static_cast<double>(j)) / h;
  const double p0 = t.x[j], p1 = t.x[j + 1], p2 = t.x[j + 2], p3 = t.x[j + 3];
  // Lagrange cubic through nodes 0..3 and its derivative at s.
  const double x0 = -p0 * (s - 1) * (s - 2) * (s - 3) / 6 + p1 * s * (s - 2) * (s - 3) / 2 -
                    p2 * s * (s - 1) * (s - 3) / 2 + p3 * s * (s - 1) * (s - 2) / 6;
  const double d0 = (-p0 * (3 * s * s - 12 * s + 11) / 6 + p1 * (3 * s * s - 10 * s + 6) / 2 -
                     p2 * (3 * s * s - 8 * s + 3) / 2 + p3 * (3 * s * s - 6 * s + 2) / 6) / h;
  if (x0 > a && x0 < b && d0 > 0.0) {
    const double sx = sd.survival(x0);
    if (sx > 0.0) {
      const double x1 = x0 - (-std::log(sx) - y) * d0;
      if (x1 >= a && x1 <= b) return x1;
    }
  }
  auto g = [&](double x) { return -std::log(sd.survival(x)) - y; };
  const double ga = static_cast<double>(i) * h - y;
  const double gb = static_cast<double>(i + 1) * h - y;
  if (ga >= 0.0) return a;
  std::uintmax_t iters = 100;
  auto tol = [](double l, double r) { return r - l <= 1e-13 * std::max(1.0, std::abs(l)); };
  const auto root = boost::math::tools::toms748_solve(g, a, b, ga, gb, tol, iters);
  return 0.5 * (root.first + root.second);
}

std::vector<Atom> merge_atoms(std::vector<Atom> in) {
  std::sort(in.begin(), in.end(), [](const Atom& x, const Atom& y) { return x.value < y.value; });
  std::vector<Atom> out;
  for (const Atom& a : in) {
    if (!out.empty() && out.back().value == a.value) {
      out.back().mass += a.mass;
    } else {
      out.push_back(a);
    }
  }
  return out;
}

MgfEndpoint negate_endpoint(const MgfEndpoint& e) { return {-e.at, e.closed, e.pole_order}; }

MgfDomain negate_domain(const MgfDomain& d) {
  return {negate_endpoint(d.right), negate_endpoint(d.left), d.exact};
}

enum class PoleCombine { Max, Sum };

// Tighter of two right endpoints (or left endpoints when `right` is false).
MgfEndpoint tighter(const MgfEndpoint& x, const MgfEndpoint& y, bool right, PoleCombine how) {
  if (x.at != y.at) {
    const bool x_tighter = right ? x.at < y.at : x.at > y.at;
    return x_tighter ? x : y;
  }
  MgfEndpoint out{x.at, x.closed && y.closed, std::nullopt};
  if (out.closed) return out;
  // Open at a shared point: combine the blow-up orders of the open sides.
  std::optional<double> px = x.closed ? std::optional<double>(0.0) : x.pole_order;
  std::optional<double> py = y.closed ? std::optional<double>(0.0) : y.pole_order;
  if (px && py) out.pole_order = (how == PoleCombine::Max) ? std::max(*px, *py) : *px + *py;
  return out;
}

MgfDomain intersect(const MgfDomain& a, const MgfDomain& b, PoleCombine how) {
  return {tighter(a.left, b.left, false, how), tighter(a.right, b.right, true, how), a.exact && b.exact};
}

const MgfDomain kWholeLine{{-kInf, false, std::nullopt}, {kInf, false, std::nullopt}, true};

// P{xi - eta > x} for xi ~ Exp(mu), eta ~ Exp(nu); rate +inf encodes 0.
double exp_difference_survival(double mu, double nu, double x) {
  const bool xi_zero = std::isinf(mu);
  const bool eta_zero = std::isinf(nu);
  if (x >= 0.0) {
    if (xi_zero) return 0.0;
    if (eta_zero) return std::exp(-mu * x);
    return nu / (mu + nu) * std::exp(-mu * x);
  }
  if (eta_zero) return 1.0;
  if (xi_zero) return -std::expm1(nu * x);
  return 1.0 - mu / (mu + nu) * std::exp(nu * x);
}

std::optional<Evaluation> difference_survival(const Difference& d, double x) {
  const auto lt = exp_mixture_terms(d.left);
  const auto rt = exp_mixture_terms(d.right);
  if (lt && rt) {
    double s = 0.0;
    for (const auto& l : *lt) {
      for (const auto& r : *rt) s += l.weight * r.weight * exp_difference_survival(l.rate, r.rate, x);
    }
    return Evaluation{s, 0.0, true};
  }
  // Convolution: sum over atoms of the right part plus an integral against its
  // continuous density. The left survival must be closed form.
  if (!continuous_density(d.right, 0.0)) return std::nullopt;
  const auto probe = survival_eval(d.left, x);
  if (!probe || !probe->exact) return std::nullopt;

  double total = 0.0;
  for (const Atom& a : atoms(d.right)) {
    total += a.mass * survival_eval(d.left, x + a.value)->value;
  }
  if (atomic_mass(d.right) >= 1.0) return Evaluation{total, 0.0, true};

  const Interval sr = support(d.right);
  std::vector<double> cuts{sr.lo};
  // Kinks and jumps of r -> S_L(x + r).
  const Interval sl = support(d.left);
  std::vector<double> kinks{sl.lo - x, sl.hi - x};
  for (const Atom& a : atoms(d.left)) kinks.push_back(a.value - x);
  for (double k : kinks) {
    if (std::isfinite(k) && k > sr.lo && k < sr.hi) cuts.push_back(k);
  }
  cuts.push_back(sr.hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  auto integrand = [&](double r) {
    return survival_eval(d.left, x + r)->value * continuous_density(d.right, r).value();
  };
  double err = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const auto q = integrate_interval(integrand, cuts[i], cuts[i + 1], 1e-12);
    total += q.value;
    err += q.abs_error_estimate;
  }
  return Evaluation{std::clamp(total, 0.0, 1.0), err, false};
}

// Numeric E e^{sD} for survival-defined laws: e^{s lo} + s * int e^{sx} S(x) dx.
Evaluation survival_defined_mgf(const SurvivalDefined& sd, const MgfDomain& dom, double s) {
  if (dom.exact && !dom.contains(s)) return {kInf, 0.0, true};
  const double lo = sd.support_lo;
  auto integrand = [&](double x) {
    if (sd.log_survival) return std::exp(s * (x - lo) + sd.log_survival(x));
    return std::exp(s * (x - lo)) * sd.survival(x);
  };
  QuadResult<double> q;
  if (s < 0.0) {
    q = integrate_semi_infinite(integrand, lo, 1e-13, -s);
  } else if (sd.tail && s < tail_rate(*sd.tail)) {
    q = integrate_semi_infinite(integrand, lo, 1e-13, tail_rate(*sd.tail) - s);
  } else {
    q = integrate_to_infinity(integrand, lo, 1e-10);
  }
  const double scale = std::exp(s * lo);
  if (!q.converged || !std::isfinite(q.value) || q.value > 1e12) return {kInf, 0.0, false};
  return {scale * (1.0 + s * q.value), scale * std::abs(s) * q.abs_error_estimate, false};
}

std::complex<double> survival_defined_charfn(const SurvivalDefined& sd, double t) {
  const double lo = sd.support_lo;
  auto integrand = [&](double x) { return std::polar(sd.survival(x), t * (x - lo)); };
  QuadResult<std::complex<double>> q;
  if (sd.tail) {
    q = integrate_semi_infinite(integrand, lo, 1e-13, tail_rate(*sd.tail));
  } else {
    q = integrate_to_infinity(integrand, lo, 1e-11);
  }
  const std::complex<double> it(0.0, t);
  return std::polar(1.0, t * lo) * (1.0 + it * q.value);
}

std::complex<double> beta_charfn(const BetaLaw& b, double t) {
  if (std::abs(t) <= 8.0) return kummer_imag(b.p, b.p + b.q, t);
  auto integrand = [&](double x) {
    return std::polar(boost::math::ibeta_derivative(b.p, b.q, x), t * x);
  };
  return integrate_finite(integrand, 0.0, 1.0, 1e-12, 64).value;
}

Tri positive_log_part(const Distribution& d);
Tri negative_log_part(const Distribution& d);

Tri positive_log_part(const Distribution& d) {
  return std::visit(
      overloaded{
          [](const Negated& n) { return negative_log_part(n.inner); },
          [](const Shifted& s) { return positive_log_part(s.inner); },
          [](const Scaled& s) { return s.factor > 0 ? positive_log_part(s.inner) : negative_log_part(s.inner); },
          [](const Mixture& m) {
            Tri t = Tri::True;
            for (const auto& c : m.components) t = t && positive_log_part(c.law);
            return t;
          },
          [](const Difference& df) {
            const Tri t = positive_log_part(df.left) && negative_log_part(df.right);
            return t == Tri::True ? Tri::True : Tri::Unknown;
          },
          [](const SurvivalDefined& sd) {
            if (sd.tail) return Tri::True;
            return Tri::Unknown;
          },
          [](const auto&) { return Tri::True; },
      },
      d.node().v);
}

Tri negative_log_part(const Distribution& d) {
  return std::visit(
      overloaded{
          [](const Negated& n) { return positive_log_part(n.inner); },
          [](const Shifted& s) { return negative_log_part(s.inner); },
          [](const Scaled& s) { return s.factor > 0 ? negative_log_part(s.inner) : positive_log_part(s.inner); },
          [](const Mixture& m) {
            Tri t = Tri::True;
            for (const auto& c : m.components) t = t && negative_log_part(c.law);
            return t;
          },
          [](const Difference& df) {
            const Tri t = negative_log_part(df.left) && positive_log_part(df.right);
            return t == Tri::True ? Tri::True : Tri::Unknown;
          },
          [](const SurvivalDefined&) { return Tri::True; },
          [](const auto&) { return Tri::True; },
      },
      d.node().v);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

// ------------------------------------------------------------------ factories

Distribution point_mass(double value) {
  require(std::isfinite(value), "point_mass: value must be finite");
  return make(PointMass{value});
}

Distribution exponential(double rate) {
  require(rate > 0.0 && std::isfinite(rate), "exponential: rate must be positive");
  return make(Exponential{rate});
}

Distribution gamma_law(double shape, double rate) {
  require(shape > 0.0 && std::isfinite(shape), "gamma: shape must be positive");
  require(rate > 0.0 && std::isfinite(rate), "gamma: rate must be positive");
  return make(GammaLaw{shape, rate});
}

Distribution beta_law(double p, double q) {
  require(p > 0.0 && q > 0.0 && std::isfinite(p) && std::isfinite(q), "beta: parameters must be positive");
  return make(BetaLaw{p, q});
}

Distribution uniform_law(double lo, double hi) {
  require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, "uniform: requires finite lo < hi");
  return make(UniformLaw{lo, hi});
}

Distribution negated(Distribution inner) { return make(Negated{std::move(inner)}); }

Distribution shifted(Distribution inner, double offset) {
  require(std::isfinite(offset), "shifted: offset must be finite");
  return make(Shifted{std::move(inner), offset});
}

Distribution scaled(Distribution inner, double factor) {
  require(std::isfinite(factor) && factor != 0.0, "scaled: factor must be finite and nonzero");
  return make(Scaled{std::move(inner), factor});
}

Distribution mixture(std::vector<MixtureComponent> components) {
  require(!components.empty(), "mixture: needs at least one component");
  double total = 0.0;
  for (const auto& c : components) {
    require(c.weight > 0.0 && c.weight <= 1.0, "mixture: weights must lie in (0,1]");
    total += c.weight;
  }
  require(std::abs(total - 1.0) <= 1e-12, "mixture: weights must sum to 1");
  return make(Mixture{std::move(components)});
}

Distribution difference(Distribution left, Distribution right) {
  return make(Difference{std::move(left), std::move(right)});
}

Distribution survival_defined(std::function<double(double)> survival, double support_lo,
                              std::optional<TailModel> tail, SurvivalFamily family,
                              std::function<double(double)> log_survival) {
  require(static_cast<bool>(survival), "survival_defined: empty survival handle");
  validate_survival(survival, support_lo);
  auto table = build_table(survival, support_lo);
  return make(SurvivalDefined{std::move(survival), support_lo, std::move(tail), std::move(family), std::move(table),
                              std::move(log_survival)});
}

Distribution poly_exp_survival(double b, double power) {
  require(b > 0.0 && power >= 0.0, "poly_exp: requires b > 0 and power >= 0");
  auto s = [b, power](double x) { return x <= 0.0 ? 1.0 : std::pow(1.0 + x, -power) * std::exp(-b * x); };
  auto log_s = [b, power](double x) { return x <= 0.0 ? 0.0 : -power * std::log1p(x) - b * x; };
  return survival_defined(s, 0.0, TailModel{GammaLikeTail{1.0, -power, b}},
                          SurvivalFamily{"poly_exp", {{"b", b}, {"power", power}}}, log_s);
}

Distribution neglog_ratio_survival(double b, double lambda) {
  require(b > 0.0 && lambda > 0.0, "neglog_ratio: requires b > 0 and lambda > 0");
  require(2.0 * b + lambda > 1.0, "neglog_ratio: requires 2b + lambda > 1");
  auto s = [b, lambda](double x) {
    if (x <= 0.0) return 1.0;
    return std::exp(-b * x) * std::expm1(-lambda * x) / std::expm1(-x) / lambda;
  };
  ExpPlusRemainderTail tail;
  tail.C = 1.0 / lambda;
  tail.b = b;
  tail.remainder = [b, lambda](double x) {
    if (x <= 0.0) return 1.0 - 1.0 / lambda;
    return std::exp(-b * x) * (std::exp(-x) - std::exp(-lambda * x)) / (-std::expm1(-x)) / lambda;
  };
  tail.remainder_is_zero = (lambda == 1.0);
  tail.remainder_rate = b + std::min(1.0, lambda);
  tail.remainder_vanishes = true;
  tail.remainder_integrable = true;
  auto log_s = [b, lambda](double x) {
    if (x <= 0.0) return 0.0;
    return -b * x + std::log(std::expm1(-lambda * x) / std::expm1(-x) / lambda);
  };
  return survival_defined(s, 0.0, TailModel{std::move(tail)},
                          SurvivalFamily{"neglog_ratio", {{"b", b}, {"lambda", lambda}}}, log_s);
}

Distribution survival_from_family(const SurvivalFamily& family) {
  auto param = [&](const std::string& key) {
    for (const auto& [k, v] : family.params) {
      if (k == key) return v;
    }
    throw std::invalid_argument("survival family '" + family.name + "' is missing parameter '" + key + "'");
  };
  if (family.name == "poly_exp") return poly_exp_survival(param("b"), param("power"));
  if (family.name == "neglog_ratio") return neglog_ratio_survival(param("b"), param("lambda"));
  throw std::invalid_argument("unknown survival family '" + family.name + "'");
}

// -------------------------------------------------------------------- queries

bool MgfDomain::contains(double s) const {
  const bool above = s > left.at || (left.closed && s == left.at);
  const bool below = s < right.at || (right.closed && s == right.at);
  return above && below;
}

double sample(const Distribution& d, Rng& rng) {
  return std::visit(
      overloaded{
          [](const PointMass& p) { return p.value; },
          [&](const Exponential& e) { return -std::log(uniform_open0(rng)) / e.rate; },
          [&](const GammaLaw& g) { return std::gamma_distribution<double>(g.shape, 1.0 / g.rate)(rng); },
          [&](const BetaLaw& b) {
            if (b.q == 1.0) return std::pow(uniform_open0(rng), 1.0 / b.p);
            if (b.p == 1.0) return 1.0 - std::pow(uniform_open0(rng), 1.0 / b.q);
            const double x = std::gamma_distribution<double>(b.p, 1.0)(rng);
            const double y = std::gamma_distribution<double>(b.q, 1.0)(rng);
            return x / (x + y);
          },
          [&](const UniformLaw& u) { return u.lo + (u.hi - u.lo) * std::generate_canonical<double, 53>(rng); },
          [&](const Negated& n) { return -sample(n.inner, rng); },
          [&](const Shifted& s) { return sample(s.inner, rng) + s.offset; },
          [&](const Scaled& s) { return sample(s.inner, rng) * s.factor; },
          [&](const Mixture& m) {
            const double u = std::generate_canonical<double, 53>(rng);
            double acc = 0.0;
            for (const auto& c : m.components) {
              acc += c.weight;
              if (u < acc) return sample(c.law, rng);
            }
            return sample(m.components.back().law, rng);
          },
          [&](const Difference& df) {
            const double l = sample(df.left, rng);
            return l - sample(df.right, rng);
          },
          [&](const SurvivalDefined& sd) { return invert_survival(sd, uniform_open0(rng)); },
      },
      d.node().v);
}

double sample_above(const Distribution& d, double m, Rng& rng) {
  if (const auto* sd = std::get_if<SurvivalDefined>(&d.node().v)) {
    if (m < sd->support_lo) return sample(d, rng);
    const double tail = sd->survival(m);
    if (!(tail > 0.0)) throw std::domain_error("sample_above: P{D > m} = 0");
    return std::max(m, invert_survival(*sd, uniform_open0(rng) * tail));
  }
  if (const auto* e = std::get_if<Exponential>(&d.node().v)) {
    return std::max(m, 0.0) - std::log(uniform_open0(rng)) / e->rate;
  }
  const auto s = survival(d, m);
  if (s && !(*s > 0.0)) throw std::domain_error("sample_above: P{D > m} = 0");
  for (;;) {
    const double v = sample(d, rng);
    if (v > m) return v;
  }
}

std::vector<Atom> atoms(const Distribution& d) {
  return std::visit(
      overloaded{
          [](const PointMass& p) { return std::vector<Atom>{{p.value, 1.0}}; },
          [](const Negated& n) {
            auto a = atoms(n.inner);
            for (auto& x : a) x.value = -x.value;
            return merge_atoms(std::move(a));
          },
          [](const Shifted& s) {
            auto a = atoms(s.inner);
            for (auto& x : a) x.value += s.offset;
            return merge_atoms(std::move(a));
          },
          [](const Scaled& s) {
            auto a = atoms(s.inner);
            for (auto& x : a) x.value *= s.factor;
            return merge_atoms(std::move(a));
          },
          [](const Mixture& m) {
            std::vector<Atom> all;
            for (const auto& c : m.components) {
              for (auto a : atoms(c.law)) all.push_back({a.value, a.mass * c.weight});
            }
            return merge_atoms(std::move(all));
          },
          [](const Difference& df) {
            std::vector<Atom> all;
            const auto r = atoms(df.right);
            for (const auto& l : atoms(df.left)) {
              for (const auto& x : r) all.push_back({l.value - x.value, l.mass * x.mass});
            }
            return merge_atoms(std::move(all));
          },
          [](const auto&) { return std::vector<Atom>{}; },
      },
      d.node().v);
}

double atom_mass(const Distribution& d, double v) {
  double m = 0.0;
  for (const auto& a : atoms(d)) {
    if (a.value == v) m += a.mass;
  }
  return m;
}

double atomic_mass(const Distribution& d) {
  double m = 0.0;
  for (const auto& a : atoms(d)) m += a.mass;
  return m;
}

Interval support(const Distribution& d) {
  return std::visit(
      overloaded{
          [](const PointMass& p) { return Interval{p.value, p.value}; },
          [](const Exponential&) { return Interval{0.0, kInf}; },
          [](const GammaLaw&) { return Interval{0.0, kInf}; },
          [](const BetaLaw&) { return Interval{0.0, 1.0}; },
          [](const UniformLaw& u) { return Interval{u.lo, u.hi}; },
          [](const Negated& n) {
            const auto s = support(n.inner);
            return Interval{-s.hi, -s.lo};
          },
          [](const Shifted& s) {
            const auto i = support(s.inner);
            return Interval{i.lo + s.offset, i.hi + s.offset};
          },
          [](const Scaled& s) {
            const auto i = support(s.inner);
            return s.factor > 0 ? Interval{i.lo * s.factor, i.hi * s.factor}
                                : Interval{i.hi * s.factor, i.lo * s.factor};
          },
          [](const Mixture& m) {
            Interval out{kInf, -kInf};
            for (const auto& c : m.components) {
              const auto i = support(c.law);
              out.lo = std::min(out.lo, i.lo);
              out.hi = std::max(out.hi, i.hi);
            }
            return out;
          },
          [](const Difference& df) {
            const auto l = support(df.left);
            const auto r = support(df.right);
            return Interval{l.lo - r.hi, l.hi - r.lo};
          },
          [](const SurvivalDefined& sd) { return Interval{sd.support_lo, kInf}; },
      },
      d.node().v);
}

std::optional<Evaluation> survival_eval(const Distribution& d, double x) {
  using R = std::optional<Evaluation>;
  if (x == -kInf) return Evaluation{1.0, 0.0, true};
  if (x == kInf) return Evaluation{0.0, 0.0, true};
  // P{D < y} = 1 - P{D > y} - P{D = y}
  auto below = [](const Distribution& inner, double y) -> R {
    auto s = survival_eval(inner, y);
    if (!s) return std::nullopt;
    s->value = std::max(0.0, 1.0 - s->value - atom_mass(inner, y));
    return s;
  };
  return std::visit(
      overloaded{
          [&](const PointMass& p) -> R { return Evaluation{p.value > x ? 1.0 : 0.0, 0.0, true}; },
          [&](const Exponential& e) -> R { return Evaluation{x < 0 ? 1.0 : std::exp(-e.rate * x), 0.0, true}; },
          [&](const GammaLaw& g) -> R {
            return Evaluation{x <= 0 ? 1.0 : boost::math::gamma_q(g.shape, g.rate * x), 0.0, true};
          },
          [&](const BetaLaw& b) -> R {
            if (x <= 0) return Evaluation{1.0, 0.0, true};
            if (x >= 1) return Evaluation{0.0, 0.0, true};
            return Evaluation{boost::math::ibetac(b.p, b.q, x), 0.0, true};
          },
          [&](const UniformLaw& u) -> R {
            return Evaluation{std::clamp((u.hi - x) / (u.hi - u.lo), 0.0, 1.0), 0.0, true};
          },
          [&](const Negated& n) -> R { return below(n.inner, -x); },
          [&](const Shifted& s) -> R { return survival_eval(s.inner, x - s.offset); },
          [&](const Scaled& s) -> R {
            if (s.factor > 0) return survival_eval(s.inner, x / s.factor);
            return below(s.inner, x / s.factor);
          },
          [&](const Mixture& m) -> R {
            Evaluation out{0.0, 0.0, true};
            for (const auto& c : m.components) {
              const auto e = survival_eval(c.law, x);
              if (!e) return std::nullopt;
              out.value += c.weight * e->value;
              out.abs_error += c.weight * e->abs_error;
              out.exact = out.exact && e->exact;
            }
            return out;
          },
          [&](const Difference& df) -> R { return difference_survival(df, x); },
          [&](const SurvivalDefined& sd) -> R {
            return Evaluation{x < sd.support_lo ? 1.0 : sd.survival(x), 0.0, true};
          },
      },
      d.node().v);
}

std::optional<double> survival(const Distribution& d, double x) {
  const auto e = survival_eval(d, x);
  if (!e) return std::nullopt;
  return e->value;
}

std::optional<double> log_survival(const Distribution& d, double x) {
  if (const auto* sd = std::get_if<SurvivalDefined>(&d.node().v); sd && sd->log_survival) {
    return x <= sd->support_lo ? 0.0 : sd->log_survival(x);
  }
  const auto s = survival(d, x);
  if (!s) return std::nullopt;
  return std::log(*s);
}

std::optional<double> mass(const Distribution& d, double lo, bool lo_closed, double hi, bool hi_closed) {
  const auto s_lo = survival_eval(d, lo);
  const auto s_hi = survival_eval(d, hi);
  if (!s_lo || !s_hi || !s_lo->exact || !s_hi->exact) return std::nullopt;
  const double a_lo = std::isfinite(lo) ? atom_mass(d, lo) : 0.0;
  const double a_hi = std::isfinite(hi) ? atom_mass(d, hi) : 0.0;
  double m = s_lo->value - s_hi->value - a_hi;
  if (lo_closed) m += a_lo;
  if (hi_closed) m += a_hi;
  return std::clamp(m, 0.0, 1.0);
}

std::optional<double> continuous_density(const Distribution& d, double x) {
  using R = std::optional<double>;
  return std::visit(
      overloaded{
          [](const PointMass&) -> R { return 0.0; },
          [&](const Exponential& e) -> R { return x < 0 ? 0.0 : e.rate * std::exp(-e.rate * x); },
          [&](const GammaLaw& g) -> R {
            return x <= 0 ? 0.0 : g.rate * boost::math::gamma_p_derivative(g.shape, g.rate * x);
          },
          [&](const BetaLaw& b) -> R {
            return (x <= 0 || x >= 1) ? 0.0 : boost::math::ibeta_derivative(b.p, b.q, x);
          },
          [&](const UniformLaw& u) -> R { return (x < u.lo || x > u.hi) ? 0.0 : 1.0 / (u.hi - u.lo); },
          [&](const Negated& n) -> R { return continuous_density(n.inner, -x); },
          [&](const Shifted& s) -> R { return continuous_density(s.inner, x - s.offset); },
          [&](const Scaled& s) -> R {
            const auto v = continuous_density(s.inner, x / s.factor);
            if (!v) return std::nullopt;
            return *v / std::abs(s.factor);
          },
          [&](const Mixture& m) -> R {
            double out = 0.0;
            for (const auto& c : m.components) {
              const auto v = continuous_density(c.law, x);
              if (!v) return std::nullopt;
              out += c.weight * *v;
            }
            return out;
          },
          [](const auto&) -> R { return std::nullopt; },
      },
      d.node().v);
}

std::optional<std::vector<ContinuousPiece>> continuous_pieces(const Distribution& d) {
  using R = std::optional<std::vector<ContinuousPiece>>;
  using V = std::vector<ContinuousPiece>;
  return std::visit(
      overloaded{
          [](const PointMass&) -> R { return V{}; },
          [](const Exponential&) -> R { return V{{1.0, 0.0, kInf, 0.0, 0.0}}; },
          [](const GammaLaw& g) -> R { return V{{1.0, 0.0, kInf, g.shape - 1.0, 0.0}}; },
          [](const BetaLaw& b) -> R { return V{{1.0, 0.0, 1.0, b.p - 1.0, b.q - 1.0}}; },
          [](const UniformLaw& u) -> R { return V{{1.0, u.lo, u.hi, 0.0, 0.0}}; },
          [](const Negated& n) -> R {
            auto in = continuous_pieces(n.inner);
            if (!in) return std::nullopt;
            for (auto& p : *in) p = {p.weight, -p.hi, -p.lo, p.right_exponent, p.left_exponent};
            return in;
          },
          [](const Shifted& s) -> R {
            auto in = continuous_pieces(s.inner);
            if (!in) return std::nullopt;
            for (auto& p : *in) {
              p.lo += s.offset;
              p.hi += s.offset;
            }
            return in;
          },
          [](const Scaled& s) -> R {
            auto in = continuous_pieces(s.inner);
            if (!in) return std::nullopt;
            for (auto& p : *in) {
              if (s.factor > 0) {
                p = {p.weight, p.lo * s.factor, p.hi * s.factor, p.left_exponent, p.right_exponent};
              } else {
                p = {p.weight, p.hi * s.factor, p.lo * s.factor, p.right_exponent, p.left_exponent};
              }
            }
            return in;
          },
          [](const Mixture& m) -> R {
            V out;
            for (const auto& c : m.components) {
              auto in = continuous_pieces(c.law);
              if (!in) return std::nullopt;
              for (auto p : *in) {
                p.weight *= c.weight;
                out.push_back(p);
              }
            }
            return out;
          },
          [](const auto&) -> R { return std::nullopt; },
      },
      d.node().v);
}

MgfDomain mgf_domain(const Distribution& d) {
  return std::visit(
      overloaded{
          [](const PointMass&) { return kWholeLine; },
          [](const Exponential& e) { return MgfDomain{{-kInf, false, std::nullopt}, {e.rate, false, 1.0}, true}; },
          [](const GammaLaw& g) {
            return MgfDomain{{-kInf, false, std::nullopt}, {g.rate, false, g.shape}, true};
          },
          [](const BetaLaw&) { return kWholeLine; },
          [](const UniformLaw&) { return kWholeLine; },
          [](const Negated& n) { return negate_domain(mgf_domain(n.inner)); },
          [](const Shifted& s) { return mgf_domain(s.inner); },
          [](const Scaled& s) {
            MgfDomain in = mgf_domain(s.inner);
            if (s.factor < 0) in = negate_domain(in);
            const double f = std::abs(s.factor);
            in.left.at /= f;
            in.right.at /= f;
            return in;
          },
          [](const Mixture& m) {
            MgfDomain out = kWholeLine;
            for (const auto& c : m.components) out = intersect(out, mgf_domain(c.law), PoleCombine::Max);
            return out;
          },
          [](const Difference& df) {
            return intersect(mgf_domain(df.left), negate_domain(mgf_domain(df.right)), PoleCombine::Sum);
          },
          [](const SurvivalDefined& sd) {
            MgfDomain out{{-kInf, false, std::nullopt}, {0.0, true, std::nullopt}, false};
            if (!sd.tail) return out;
            out.exact = true;
            if (const auto* g = std::get_if<GammaLikeTail>(&*sd.tail)) {
              if (g->c < -1.0) {
                out.right = {g->b, true, std::nullopt};
              } else if (g->c > -1.0) {
                out.right = {g->b, false, g->c + 1.0};
              } else {
                out.right = {g->b, false, std::nullopt};
              }
            } else {
              out.right = {std::get<ExpPlusRemainderTail>(*sd.tail).b, false, 1.0};
            }
            return out;
          },
      },
      d.node().v);
}

Evaluation mgf_eval(const Distribution& d, double s) {
  if (s == 0.0) return {1.0, 0.0, true};
  auto exact = [](double v) { return Evaluation{v, 0.0, true}; };
  return std::visit(
      overloaded{
          [&](const PointMass& p) { return exact(std::exp(s * p.value)); },
          [&](const Exponential& e) { return exact(s < e.rate ? e.rate / (e.rate - s) : kInf); },
          [&](const GammaLaw& g) { return exact(s < g.rate ? std::pow(g.rate / (g.rate - s), g.shape) : kInf); },
          [&](const BetaLaw& b) { return exact(kummer_real(b.p, b.p + b.q, s)); },
          [&](const UniformLaw& u) {
            const double w = s * (u.hi - u.lo);
            return exact(std::exp(s * u.lo) * std::expm1(w) / w);
          },
          [&](const Negated& n) { return mgf_eval(n.inner, -s); },
          [&](const Shifted& sh) {
            Evaluation e = mgf_eval(sh.inner, s);
            const double f = std::exp(s * sh.offset);
            e.value *= f;
            e.abs_error *= f;
            return e;
          },
          [&](const Scaled& sc) { return mgf_eval(sc.inner, s * sc.factor); },
          [&](const Mixture& m) {
            Evaluation out{0.0, 0.0, true};
            for (const auto& c : m.components) {
              const Evaluation e = mgf_eval(c.law, s);
              out.value += c.weight * e.value;
              out.abs_error += c.weight * e.abs_error;
              out.exact = out.exact && e.exact;
            }
            return out;
          },
          [&](const Difference& df) {
            const Evaluation l = mgf_eval(df.left, s);
            const Evaluation r = mgf_eval(df.right, -s);
            return Evaluation{l.value * r.value, l.abs_error * r.value + r.abs_error * l.value,
                              l.exact && r.exact};
          },
          [&](const SurvivalDefined& sd) { return survival_defined_mgf(sd, mgf_domain(d), s); },
      },
      d.node().v);
}

double mgf(const Distribution& d, double s) { return mgf_eval(d, s).value; }

std::complex<double> charfn(const Distribution& d, double t) {
  using C = std::complex<double>;
  if (t == 0.0) return 1.0;
  const C it(0.0, t);
  return std::visit(
      overloaded{
          [&](const PointMass& p) { return std::polar(1.0, t * p.value); },
          [&](const Exponential& e) { return e.rate / (e.rate - it); },
          [&](const GammaLaw& g) { return std::pow(g.rate / (g.rate - it), g.shape); },
          [&](const BetaLaw& b) { return beta_charfn(b, t); },
          [&](const UniformLaw& u) {
            return (std::polar(1.0, t * u.hi) - std::polar(1.0, t * u.lo)) / (it * (u.hi - u.lo));
          },
          [&](const Negated& n) { return charfn(n.inner, -t); },
          [&](const Shifted& s) { return std::polar(1.0, t * s.offset) * charfn(s.inner, t); },
          [&](const Scaled& s) { return charfn(s.inner, t * s.factor); },
          [&](const Mixture& m) {
            C out = 0.0;
            for (const auto& c : m.components) out += c.weight * charfn(c.law, t);
            return out;
          },
          [&](const Difference& df) { return charfn(df.left, t) * charfn(df.right, -t); },
          [&](const SurvivalDefined& sd) { return survival_defined_charfn(sd, t); },
      },
      d.node().v);
}

std::optional<double> mean(const Distribution& d) {
  using R = std::optional<double>;
  return std::visit(
      overloaded{
          [](const PointMass& p) -> R { return p.value; },
          [](const Exponential& e) -> R { return 1.0 / e.rate; },
          [](const GammaLaw& g) -> R { return g.shape / g.rate; },
          [](const BetaLaw& b) -> R { return b.p / (b.p + b.q); },
          [](const UniformLaw& u) -> R { return 0.5 * (u.lo + u.hi); },
          [](const Negated& n) -> R {
            const auto m = mean(n.inner);
            if (!m) return std::nullopt;
            return -*m;
          },
          [](const Shifted& s) -> R {
            const auto m = mean(s.inner);
            if (!m) return std::nullopt;
            return *m + s.offset;
          },
          [](const Scaled& s) -> R {
            const auto m = mean(s.inner);
            if (!m) return std::nullopt;
            return *m * s.factor;
          },
          [](const Mixture& mx) -> R {
            double out = 0.0;
            for (const auto& c : mx.components) {
              const auto m = mean(c.law);
              if (!m) return std::nullopt;
              out += c.weight * *m;
            }
            return out;
          },
          [](const Difference& df) -> R {
            const auto l = mean(df.left);
            const auto r = mean(df.right);
            if (!l || !r) return std::nullopt;
            return *l - *r;
          },
          [](const SurvivalDefined& sd) -> R {
            QuadResult<double> q;
            if (sd.tail) {
              q = integrate_semi_infinite(sd.survival, sd.support_lo, 1e-13, tail_rate(*sd.tail));
            } else {
              q = integrate_to_infinity(sd.survival, sd.support_lo, 1e-10);
            }
            if (!q.converged) return std::nullopt;
            return sd.support_lo + q.value;
          },
      },
      d.node().v);
}

std::optional<double> expected_log_abs(const Distribution& d) {
  using R = std::optional<double>;
  auto x_log_x = [](double y) { return y == 0.0 ? 0.0 : y * std::log(y) - y; };
  return std::visit(
      overloaded{
          [](const PointMass& p) -> R { return p.value == 0.0 ? -kInf : std::log(std::abs(p.value)); },
          [](const Exponential& e) -> R { return -kEulerGamma - std::log(e.rate); },
          [](const GammaLaw& g) -> R { return boost::math::digamma(g.shape) - std::log(g.rate); },
          [](const BetaLaw& b) -> R { return boost::math::digamma(b.p) - boost::math::digamma(b.p + b.q); },
          [&](const UniformLaw& u) -> R {
            const double w = u.hi - u.lo;
            if (u.lo >= 0) return (x_log_x(u.hi) - x_log_x(u.lo)) / w;
            if (u.hi <= 0) return (x_log_x(-u.lo) - x_log_x(-u.hi)) / w;
            return (x_log_x(u.hi) + x_log_x(-u.lo)) / w;
          },
          [](const Negated& n) -> R { return expected_log_abs(n.inner); },
          [](const Scaled& s) -> R {
            const auto m = expected_log_abs(s.inner);
            if (!m) return std::nullopt;
            return *m + std::log(std::abs(s.factor));
          },
          [](const Shifted& s) -> R {
            if (const auto* p = std::get_if<PointMass>(&s.inner.node().v)) {
              const double v = p->value + s.offset;
              return v == 0.0 ? -kInf : std::log(std::abs(v));
            }
            return std::nullopt;
          },
          [](const Mixture& mx) -> R {
            double out = 0.0;
            for (const auto& c : mx.components) {
              const auto m = expected_log_abs(c.law);
              if (!m) return std::nullopt;
              out += c.weight * *m;
            }
            return out;
          },
          [](const auto&) -> R { return std::nullopt; },
      },
      d.node().v);
}

Tri log_moment_finite(const Distribution& d) { return positive_log_part(d) && negative_log_part(d); }

Tri log_moment_negative_part_finite(const Distribution& d) { return negative_log_part(d); }

bool is_closed_form(const Distribution& d) {
  return std::visit(
      overloaded{
          [](const Negated& n) { return is_closed_form(n.inner); },
          [](const Shifted& s) { return is_closed_form(s.inner); },
          [](const Scaled& s) { return is_closed_form(s.inner); },
          [](const Mixture& m) {
            return std::all_of(m.components.begin(), m.components.end(),
                               [](const MixtureComponent& c) { return is_closed_form(c.law); });
          },
          [](const Difference& df) { return is_closed_form(df.left) && is_closed_form(df.right); },
          [](const SurvivalDefined&) { return false; },
          [](const auto&) { return true; },
      },
      d.node().v);
}

std::optional<std::vector<ExpTerm>> exp_mixture_terms(const Distribution& d) {
  using R = std::optional<std::vector<ExpTerm>>;
  return std::visit(
      overloaded{
          [](const Exponential& e) -> R { return std::vector<ExpTerm>{{1.0, e.rate}}; },
          [](const GammaLaw& g) -> R {
            if (g.shape != 1.0) return std::nullopt;
            return std::vector<ExpTerm>{{1.0, g.rate}};
          },
          [](const PointMass& p) -> R {
            if (p.value != 0.0) return std::nullopt;
            return std::vector<ExpTerm>{{1.0, kInf}};
          },
          [](const Scaled& s) -> R {
            if (s.factor <= 0) return std::nullopt;
            auto in = exp_mixture_terms(s.inner);
            if (!in) return std::nullopt;
            for (auto& t : *in) t.rate /= s.factor;
            return in;
          },
          [](const Mixture& m) -> R {
            std::vector<ExpTerm> out;
            for (const auto& c : m.components) {
              auto in = exp_mixture_terms(c.law);
              if (!in) return std::nullopt;
              for (auto t : *in) out.push_back({t.weight * c.weight, t.rate});
            }
            return out;
          },
          [](const auto&) -> R { return std::nullopt; },
      },
      d.node().v);
}

namespace {

struct LeadingInfo {
  LeadingExponential lead;
  bool remainder_zero;  // r == 0 on [0, inf)
};

std::optional<LeadingInfo> leading_info(const Distribution& d) {
  using R = std::optional<LeadingInfo>;
  return std::visit(
      overloaded{
          [](const Exponential& e) -> R { return LeadingInfo{{1.0, e.rate, kInf}, true}; },
          [](const GammaLaw& g) -> R {
            if (g.shape != 1.0) return std::nullopt;
            return LeadingInfo{{1.0, g.rate, kInf}, true};
          },
          [](const Shifted& s) -> R {
            auto in = leading_info(s.inner);
            if (!in) return std::nullopt;
            in->lead.C *= std::exp(in->lead.b * s.offset);
            in->remainder_zero = in->remainder_zero && s.offset <= 0.0;
            return in;
          },
          [](const Scaled& s) -> R {
            if (s.factor <= 0) return std::nullopt;
            auto in = leading_info(s.inner);
            if (!in) return std::nullopt;
            in->lead.b /= s.factor;
            in->lead.next_rate /= s.factor;
            return in;
          },
          [](const Mixture& m) -> R {
            std::vector<std::pair<double, LeadingInfo>> tails;
            bool bounded_parts = false;
            for (const auto& c : m.components) {
              if (std::isfinite(support(c.law).hi)) {
                bounded_parts = true;
                continue;
              }
              auto in = leading_info(c.law);
              if (!in) return std::nullopt;
              tails.emplace_back(c.weight, *in);
            }
            if (tails.empty()) return std::nullopt;
            double b = kInf;
            for (const auto& [w, t] : tails) b = std::min(b, t.lead.b);
            LeadingInfo out{{0.0, b, kInf}, !bounded_parts};
            for (const auto& [w, t] : tails) {
              if (t.lead.b == b) {
                out.lead.C += w * t.lead.C;
                out.lead.next_rate = std::min(out.lead.next_rate, t.lead.next_rate);
                out.remainder_zero = out.remainder_zero && t.remainder_zero;
              } else {
                out.lead.next_rate = std::min(out.lead.next_rate, t.lead.b);
                out.remainder_zero = false;
              }
            }
            return out;
          },
          [](const Difference& df) -> R {
            auto in = leading_info(df.left);
            if (!in) return std::nullopt;
            const double b = in->lead.b;
            const MgfDomain rd = mgf_domain(df.right);
            // P{L - R > x} = E S_L(x + R); needs E e^{-bR} finite with room.
            if (!rd.exact || !(rd.left.at < -b)) return std::nullopt;
            const Evaluation e = mgf_eval(df.right, -b);
            if (!e.exact || !std::isfinite(e.value)) return std::nullopt;
            const bool right_nonneg = support(df.right).lo >= 0.0;
            LeadingInfo out{{in->lead.C * e.value, b, in->lead.next_rate},
                            in->remainder_zero && right_nonneg};
            if (!right_nonneg) out.lead.next_rate = std::min(out.lead.next_rate, -rd.left.at);
            return out;
          },
          [](const SurvivalDefined& sd) -> R {
            if (!sd.tail) return std::nullopt;
            const auto* t = std::get_if<ExpPlusRemainderTail>(&*sd.tail);
            if (!t) return std::nullopt;
            return LeadingInfo{{t->C, t->b, t->remainder_rate}, t->remainder_is_zero};
          },
          [](const auto&) -> R { return std::nullopt; },
      },
      d.node().v);
}

}  // namespace

std::optional<LeadingExponential> leading_exponential(const Distribution& d) {
  const auto info = leading_info(d);
  if (!info) return std::nullopt;
  return info->lead;
}

std::optional<TailModel> tail_model(const Distribution& d) {
  if (const auto* sd = std::get_if<SurvivalDefined>(&d.node().v)) return sd->tail;
  if (const auto* g = std::get_if<GammaLaw>(&d.node().v); g && g->shape != 1.0) {
    return TailModel{GammaLikeTail{std::pow(g->rate, g->shape - 1.0) / std::tgamma(g->shape), g->shape - 1.0, g->rate}};
  }
  const auto info = leading_info(d);
  if (!info) return std::nullopt;
  ExpPlusRemainderTail t;
  t.C = info->lead.C;
  t.b = info->lead.b;
  t.remainder_is_zero = info->remainder_zero;
  const double next = info->lead.next_rate;
  t.remainder_rate = (next > t.b) ? next : 0.0;
  t.remainder_vanishes = next > t.b;
  t.remainder_integrable = next > t.b;
  if (t.remainder_is_zero) {
    t.remainder = [](double) { return 0.0; };
  } else {
    t.remainder = [d, C = t.C, b = t.b](double x) {
      const auto s = survival(d, x);
      return (s ? *s : std::nan("")) - C * std::exp(-b * x);
    };
  }
  return TailModel{std::move(t)};
}

double leading_term(const TailModel& t, double x) {
  return std::visit(
      overloaded{
          [x](const GammaLikeTail& g) { return g.a * std::pow(x, g.c) * std::exp(-g.b * x); },
          [x](const ExpPlusRemainderTail& e) { return e.C * std::exp(-e.b * x); },
      },
      t);
}

std::string describe(const Distribution& d) {
  return std::visit(
      overloaded{
          [](const PointMass& p) { return "PointMass(" + fmt(p.value) + ")"; },
          [](const Exponential& e) { return "Exp(" + fmt(e.rate) + ")"; },
          [](const GammaLaw& g) { return "Gamma(" + fmt(g.shape) + "," + fmt(g.rate) + ")"; },
          [](const BetaLaw& b) { return "Beta(" + fmt(b.p) + "," + fmt(b.q) + ")"; },
          [](const UniformLaw& u) { return "Uniform(" + fmt(u.lo) + "," + fmt(u.hi) + ")"; },
          [](const Negated& n) { return "-(" + describe(n.inner) + ")"; },
          [](const Shifted& s) { return describe(s.inner) + "+" + fmt(s.offset); },
          [](const Scaled& s) { return fmt(s.factor) + "*" + describe(s.inner); },
          [](const Mixture& m) {
            std::string out = "Mixture[";
            for (std::size_t i = 0; i < m.components.size(); ++i) {
              if (i) out += " + ";
              out += fmt(m.components[i].weight) + "*" + describe(m.components[i].law);
            }
            return out + "]";
          },
          [](const Difference& df) { return "(" + describe(df.left) + " - " + describe(df.right) + ")"; },
          [](const SurvivalDefined& sd) {
            if (sd.family.name.empty()) return std::string("SurvivalDefined");
            std::string out = "Survival:" + sd.family.name + "(";
            for (std::size_t i = 0; i < sd.family.params.size(); ++i) {
              if (i) out += ",";
              out += sd.family.params[i].first + "=" + fmt(sd.family.params[i].second);
            }
            return out + ")";
          },
      },
      d.node().v);
}

}  // namespace perp
