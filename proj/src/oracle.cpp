#include "perpetuity/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "perpetuity/quadrature.hpp"
#include "perpetuity/stats.hpp"

namespace perp {

namespace {

constexpr double kConvTol = 1e-12;

template <class>
inline constexpr bool kAlwaysFalse = false;

// int_0^inf S_L(x + sigma u) f_U(u) du, split where the argument of S_L
// crosses 0 (S_L = 1 below it).
template <class S, class F>
double convolution_survival(S&& survival_left, F&& density_u, double sigma, double x, double rate_u) {
  auto g = [&](double u) { return survival_left(x + sigma * u) * density_u(u); };
  const double kink = -sigma * x;
  if (kink <= 0.0) return integrate_semi_infinite(g, 0.0, kConvTol, rate_u).value;
  const double head = integrate_finite(g, 0.0, kink, kConvTol, 8).value;
  return head + integrate_semi_infinite(g, kink, kConvTol, rate_u).value;
}

double gamma_survival(double shape, double rate, double y) {
  return y <= 0.0 ? 1.0 : boost::math::gamma_q(shape, rate * y);
}

double gamma_density(double shape, double rate, double y) {
  return y <= 0.0 ? 0.0 : rate * boost::math::gamma_p_derivative(shape, rate * y);
}

// Two-sided exponential mixture B = M - M', M = p Exp(b) + (1-p) Exp(c), A ~
// Beta(lambda, 1). X is symmetric with the real characteristic function
// Phi(t) (b^2/(b^2+t^2))^{c1 lambda/2} (c^2/(c^2+t^2))^{c2 lambda/2}; its
// survival comes from the Gil-Pelaez inversion formula.
std::function<double(double)> mixture_case_survival(double p, double b, double c, double lambda) {
  const double c1 = p * p + 2.0 * p * (1.0 - p) * c / (b + c);
  const double c2 = (1.0 - p) * (1.0 - p) + 2.0 * p * (1.0 - p) * b / (b + c);
  auto psi = [=](double t) {
    const double u = b * b / (b * b + t * t);
    const double v = c * c / (c * c + t * t);
    return (c1 * u + c2 * v) * std::pow(u, c1 * lambda / 2.0) * std::pow(v, c2 * lambda / 2.0);
  };
  double cut = 16.0;
  while (psi(cut) / cut > 1e-12) cut *= 2.0;
  return [psi, cut](double x) {
    if (x == 0.0) return 0.5;
    const double ax = std::abs(x);
    auto g = [&](double t) { return t < 1e-12 ? ax * psi(t) : std::sin(t * ax) / t * psi(t); };
    const auto panels = static_cast<std::size_t>(std::ceil(cut * ax / std::numbers::pi)) + 16;
    const double upper = 0.5 - integrate_finite(g, 0.0, cut, 1e-11, panels, 50 * panels).value / std::numbers::pi;
    return x > 0.0 ? upper : 1.0 - upper;
  };
}

}  // namespace

std::vector<ReferenceCase> list_cases() {
  std::vector<ReferenceCase> out;
  {
    const double c = 2.0, b = 1.0;
    out.push_back({"E1", JointInput::independent(beta_law(c, 1.0), exponential(b)), GammaExact{c + 1.0, b},
                   "A ~ Beta(2,1), B ~ Exp(1): X ~ Gamma(3,1)"});
  }
  {
    const double g = 0.5, a = 1.0, b = 2.0;
    Distribution B = mixture({{g * g, point_mass(0.0)},
                              {g * (1.0 - g), exponential(a)},
                              {g * (1.0 - g), negated(exponential(b))},
                              {(1.0 - g) * (1.0 - g), difference(exponential(a), exponential(b))}});
    auto s = [a, b](double x) { return x > 0.0 ? b / (a + b) * std::exp(-a * x) : 1.0 - a / (a + b) * std::exp(b * x); };
    out.push_back({"E2", JointInput::independent(point_mass(g), B), ExplicitSurvival{s},
                   "A = 0.5, B a mixture of 0, Exp(1), -Exp(2), Exp(1)-Exp(2): X ~ Exp(1) - Exp(2)"});
  }
  {
    const double lambda = 1.0, a = 1.0, b = 1.0;
    out.push_back({"E3", JointInput::independent(beta_law(lambda, 1.0), difference(exponential(b), exponential(a))),
                   DifferenceOfGammas{a * lambda / (a + b) + 1.0, b, b * lambda / (a + b) + 1.0, a},
                   "A ~ Beta(1,1), B ~ Exp(1) - Exp(1): X ~ Gamma(1.5,1) - Gamma(1.5,1)"});
  }
  {
    const double p = 0.5, b = 1.0, c = 2.0, lambda = 1.0;
    Distribution M = mixture({{p, exponential(b)}, {1.0 - p, exponential(c)}});
    out.push_back({"E4", JointInput::independent(beta_law(lambda, 1.0), difference(M, M)),
                   ExplicitSurvival{mixture_case_survival(p, b, c, lambda)},
                   "A ~ Beta(1,1), B = M - M' with M ~ (Exp(1) + Exp(2))/2: survival by Fourier inversion"});
  }
  {
    const double b = 1.0, lambda = 2.0;
    Distribution B = neglog_ratio_survival(b, lambda);
    out.push_back({"E5", JointInput::independent(beta_law(lambda, 1.0), B), ShiftedNegLogBeta{b, lambda, B},
                   "A ~ Beta(2,1), P{B>x} = e^{-x}(1-e^{-2x})/(2(1-e^{-x})): X ~ -log Beta(1,2) + B"});
  }
  return out;
}

std::optional<ReferenceCase> find_case(const std::string& id) {
  for (auto& c : list_cases()) {
    if (c.id == id) return c;
  }
  return std::nullopt;
}

double reference_survival(const ReferenceCase& c, double x) {
  return std::visit(
      [x](const auto& law) -> double {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, GammaExact>) {
          return gamma_survival(law.shape, law.rate, x);
        } else if constexpr (std::is_same_v<T, DifferenceOfGammas>) {
          return convolution_survival([&](double y) { return gamma_survival(law.shape1, law.rate1, y); },
                                      [&](double u) { return gamma_density(law.shape2, law.rate2, u); }, 1.0, x,
                                      law.rate2);
        } else if constexpr (std::is_same_v<T, ShiftedNegLogBeta>) {
          // W = -log Y has density e^{-bw}(1-e^{-w})^{lambda-1}/B(b,lambda).
          const double norm = 1.0 / boost::math::beta(law.b, law.lambda);
          auto f_w = [&](double w) { return norm * std::exp(-law.b * w) * std::pow(-std::expm1(-w), law.lambda - 1.0); };
          auto s_b = [&](double y) { return survival(law.B, y).value(); };
          return convolution_survival(s_b, f_w, -1.0, x, law.b);
        } else if constexpr (std::is_same_v<T, ExplicitSurvival>) {
          return law.survival(x);
        } else {
          static_assert(kAlwaysFalse<T>);
        }
      },
      c.exact_X_law);
}

TailPrediction predicted_tail(const ReferenceCase& c) {
  const Distribution& B = c.joint.B();
  const auto tm = tail_model(B);
  if (!tm) throw PredictionRefused("case " + c.id + ": no tail model for B", nlohmann::json::array());
  if (const auto lambda = beta_kernel_lambda(c.joint.A())) {
    const auto* e = std::get_if<ExpPlusRemainderTail>(&*tm);
    if (e) return beta_kernel_constant(*lambda, *e, left_tail_of(B));
  }
  SimConfig cfg;
  cfg.n_samples = 1'000'000;
  cfg.master_seed = 1;
  return expected_psi_constant(c.joint, tail_rate(*tm), cfg);
}

ComparisonReport compare_empirical(const ReferenceCase& c, const SimConfig& cfg) {
  ComparisonReport rep;
  rep.case_id = c.id;
  rep.n = cfg.n_samples;
  rep.seed = cfg.master_seed;
  rep.low_n = cfg.n_samples < kLowN;
  SampleBatch batch = sample_batch(c.joint, cfg);
  rep.truncation = batch.truncation;
  std::vector<double> xs = std::move(batch.values);
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  if (n == 0) return rep;

  // The exact survival is costly for convolution cases, so the CDF is
  // tabulated on a uniform grid over the central sample range and
  // interpolated by a cubic B-spline; samples outside use it directly.
  const double lo = xs[n / 100000];
  const double hi = xs[n - 1 - n / 100000];
  std::function<double(double)> cdf = [&](double x) { return 1.0 - reference_survival(c, x); };
  std::optional<boost::math::interpolators::cardinal_cubic_b_spline<double>> spline;
  if (n > 2000 && hi > lo) {
    const std::size_t grid = 1201;
    const double h = (hi - lo) / static_cast<double>(grid - 1);
    std::vector<double> v(grid);
    for (std::size_t i = 0; i < grid; ++i) v[i] = cdf(lo + h * static_cast<double>(i));
    spline.emplace(v.begin(), v.end(), lo, h);
    cdf = [&, lo, hi](double x) { return (x >= lo && x <= hi) ? (*spline)(x) : 1.0 - reference_survival(c, x); };
  }
  rep.ks = ks_one_sample(xs, cdf);
  rep.ks_threshold = 4.0 / std::sqrt(static_cast<double>(n));
  bool ok = rep.ks < rep.ks_threshold;

  for (double level : {0.5, 0.1, 1e-2, 1e-3, 1e-4}) {
    const auto k = static_cast<std::size_t>(std::floor(level * static_cast<double>(n)));
    if (k == 0 || k >= n) continue;
    TailAnchor a{};
    a.level = level;
    a.x = 0.5 * (xs[n - k - 1] + xs[n - k]);
    a.exceedances = static_cast<std::size_t>(xs.end() - std::upper_bound(xs.begin(), xs.end(), a.x));
    a.p_hat = static_cast<double>(a.exceedances) / static_cast<double>(n);
    a.exact = reference_survival(c, a.x);
    a.ratio = a.p_hat / a.exact;
    a.assessed = a.p_hat >= 1e-4 && a.exceedances >= kMinExceedances;
    a.pass = !a.assessed || (a.ratio >= 0.9 && a.ratio <= 1.1);
    ok = ok && a.pass;
    rep.anchors.push_back(a);
  }
  rep.pass = ok;
  return rep;
}

nlohmann::json to_json(const ComparisonReport& r) {
  nlohmann::json anchors = nlohmann::json::array();
  for (const auto& a : r.anchors) {
    anchors.push_back({{"level", a.level},
                       {"x", a.x},
                       {"p_hat", a.p_hat},
                       {"exact", a.exact},
                       {"ratio", json_number(a.ratio)},
                       {"exceedances", a.exceedances},
                       {"assessed", a.assessed},
                       {"pass", a.pass}});
  }
  return {{"case", r.case_id},
          {"n", r.n},
          {"seed", r.seed},
          {"ks", r.ks},
          {"ks_threshold", r.ks_threshold},
          {"tail_ratios", anchors},
          {"truncation", {{"mean_terms", r.truncation.mean_terms}, {"hit_max_terms", r.truncation.hit_max_terms}}},
          {"low_n", r.low_n},
          {"pass", r.pass}};
}

void write_table(std::ostream& os, const ComparisonReport& r) {
  char buf[160];
  os << "case " << r.case_id << "  N=" << r.n << "  seed=" << r.seed << (r.low_n ? "  (low N: smoke test only)" : "")
     << "\n";
  std::snprintf(buf, sizeof buf, "KS %.5f (threshold %.5f)\n", r.ks, r.ks_threshold);
  os << buf;
  os << "  level        x            p_hat        exact        ratio    n_exc  judged\n";
  for (const auto& a : r.anchors) {
    std::snprintf(buf, sizeof buf, "  %-10.0e %-12.5g %-12.5g %-12.5g %-8.4f %-6zu %s\n", a.level, a.x, a.p_hat,
                  a.exact, a.ratio, a.exceedances, a.assessed ? (a.pass ? "ok" : "FAIL") : "-");
    os << buf;
  }
  os << (r.pass ? "PASS" : "FAIL") << "\n";
}

}  // namespace perp
