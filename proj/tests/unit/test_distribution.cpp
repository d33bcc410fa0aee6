#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "perpetuity/distribution.hpp"
#include "perpetuity/joint.hpp"
#include "perpetuity/stats.hpp"
#include "support/oracles.hpp"

using namespace perp;

namespace {

std::vector<double> draw(const Distribution& d, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = sample(d, rng);
  return out;
}

// Mixture B whose perpetuity with A = g is Exp(a) - Exp(b).
Distribution constant_a_mixture(double g, double a, double b) {
  return mixture({{g * g, point_mass(0.0)},
                  {g * (1.0 - g), exponential(a)},
                  {g * (1.0 - g), negated(exponential(b))},
                  {(1.0 - g) * (1.0 - g), difference(exponential(a), exponential(b))}});
}

}  // namespace

TEST_SUITE("distribution") {
  TEST_CASE("factories reject invalid parameters") {
    CHECK_THROWS_AS(exponential(0.0), std::invalid_argument);
    CHECK_THROWS_AS(gamma_law(-1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(beta_law(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(scaled(exponential(1.0), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(mixture({{0.5, point_mass(0.0)}, {0.4, point_mass(1.0)}}), std::invalid_argument);
    CHECK_NOTHROW(mixture({{0.5, point_mass(0.0)}, {0.5 + 1e-13, point_mass(1.0)}}));
  }

  TEST_CASE("closed-form survival values") {
    CHECK(*survival(exponential(1.0), 2.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
    CHECK(*survival(gamma_law(3.0, 1.0), 5.0) == doctest::Approx(oracle::erlang_survival(3, 1.0, 5.0)).epsilon(1e-12));
    CHECK(*survival(gamma_law(3.0, 1.0), 5.0) == doctest::Approx(0.1246520).epsilon(1e-6));
    CHECK(*survival(gamma_law(1.5, 2.0), 0.7) == doctest::Approx(oracle::gamma_q(1.5, 1.4)).epsilon(1e-12));
  }

  TEST_CASE("difference of exponentials has the two-sided exponential survival") {
    const double a = 1.0, b = 2.0;
    // B = Exp(b) - Exp(a): P{B > x} = a/(a+b) e^{-bx} for x > 0.
    Distribution B = difference(exponential(b), exponential(a));
    for (double x : {0.1, 0.5, 1.0, 3.0}) {
      CHECK(*survival(B, x) == doctest::Approx(a / (a + b) * std::exp(-b * x)).epsilon(1e-10));
    }
    const std::complex<double> i(0.0, 1.0);
    for (double t : {0.3, 1.0, 4.0}) {
      const auto expected = (b / (b - i * t)) * (a / (a + i * t));
      CHECK(std::abs(charfn(B, t) - expected) < 1e-14);
    }
  }

  TEST_CASE("MGF values and domain endpoints") {
    CHECK(mgf(exponential(2.0), 1.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(std::isinf(mgf(exponential(1.0), 1.0)));
    const auto dom = mgf_domain(exponential(3.0));
    CHECK(dom.right.at == 3.0);
    CHECK_FALSE(dom.right.closed);
    CHECK(std::isinf(dom.left.at));

    // E e^{sB} = ((a - g s)/(a - s)) ((b + g s)/(b + s)) for the constant-A mixture.
    const double g = 0.5, a = 1.0, b = 2.0, s = 0.5;
    CHECK(mgf(constant_a_mixture(g, a, b), s) == doctest::Approx(1.35).epsilon(1e-13));
    for (double u : {-1.5, -0.7, 0.2, 0.9}) {
      CHECK(mgf(constant_a_mixture(g, a, b), u) ==
            doctest::Approx((a - g * u) / (a - u) * (b + g * u) / (b + u)).epsilon(1e-12));
    }
  }

  TEST_CASE("two-sided mixture characteristic function") {
    const double p = 0.5, b = 1.0, c = 2.0;
    Distribution M = mixture({{p, exponential(b)}, {1.0 - p, exponential(c)}});
    const double c1 = p * p + 2.0 * p * (1.0 - p) * c / (b + c);
    const double c2 = (1.0 - p) * (1.0 - p) + 2.0 * p * (1.0 - p) * b / (b + c);
    for (double t : {0.0, 0.5, 1.0, 3.0}) {
      const double expected = c1 * b * b / (b * b + t * t) + c2 * c * c / (c * c + t * t);
      CHECK(std::abs(charfn(difference(M, M), t) - expected) < 1e-14);
    }
  }

  TEST_CASE("mgf at zero and charfn at zero are exactly one; |charfn| <= 1") {
    const std::vector<Distribution> laws = {
        exponential(1.5), gamma_law(2.5, 0.7), beta_law(2.0, 3.0), uniform_law(-1.0, 2.0),
        constant_a_mixture(0.5, 1.0, 2.0), shifted(scaled(exponential(1.0), -2.0), 0.3),
        poly_exp_survival(1.0, 2.0), neglog_ratio_survival(1.0, 2.0)};
    for (const auto& d : laws) {
      INFO(describe(d));
      CHECK(mgf(d, 0.0) == 1.0);
      CHECK(charfn(d, 0.0) == std::complex<double>(1.0, 0.0));
      for (double t = -10.0; t <= 10.0; t += 0.37) CHECK(std::abs(charfn(d, t)) <= 1.0 + 1e-12);
    }
  }

  TEST_CASE("log-MGF is convex on a grid inside the domain") {
    const std::vector<Distribution> laws = {exponential(2.0), gamma_law(3.0, 1.0), beta_law(2.0, 1.0),
                                            constant_a_mixture(0.5, 1.0, 2.0), uniform_law(-1.0, 1.0)};
    for (const auto& d : laws) {
      INFO(describe(d));
      const auto dom = mgf_domain(d);
      const double lo = std::max(dom.left.at, -4.0) + 0.05;
      const double hi = std::min(dom.right.at, 4.0) - 0.05;
      const double h = (hi - lo) / 40.0;
      for (int i = 1; i < 40; ++i) {
        const double s = lo + h * i;
        const double l0 = std::log(mgf(d, s - h)), l1 = std::log(mgf(d, s)), l2 = std::log(mgf(d, s + h));
        CHECK(l0 - 2.0 * l1 + l2 >= -1e-9 * std::max(1.0, std::abs(l1)));
      }
    }
  }

  TEST_CASE("empirical survival of 10^6 draws within 3 binomial sigma at 10 points") {
    struct Case {
      Distribution d;
      double lo, hi;
    };
    const std::vector<Case> cases = {
        {exponential(1.0), 0.05, 6.0},
        {gamma_law(3.0, 1.0), 0.5, 9.0},
        {beta_law(2.0, 1.0), 0.05, 0.95},
        {uniform_law(-1.0, 2.0), -0.9, 1.9},
        {constant_a_mixture(0.5, 1.0, 2.0), -2.0, 4.0},
        {negated(gamma_law(2.0, 2.0)), -3.0, -0.1},
        {poly_exp_survival(1.0, 2.0), 0.05, 5.0},
        {neglog_ratio_survival(1.0, 2.0), 0.05, 6.0},
    };
    std::uint64_t seed = 11;
    for (const auto& c : cases) {
      INFO(describe(c.d));
      const std::size_t n = 1'000'000;
      auto xs = draw(c.d, n, seed++);
      std::sort(xs.begin(), xs.end());
      for (int k = 0; k < 10; ++k) {
        const double x = c.lo + (c.hi - c.lo) * k / 9.0;
        const double exact = *survival(c.d, x);
        const double p_hat =
            static_cast<double>(xs.end() - std::upper_bound(xs.begin(), xs.end(), x)) / static_cast<double>(n);
        CHECK(std::abs(p_hat - exact) <= 3.0 * std::sqrt(exact * (1.0 - exact) / n) + 1e-12);
      }
    }
  }

  TEST_CASE("survival-defined laws are nonincreasing from one to zero") {
    for (const auto& d : {poly_exp_survival(1.0, 2.0), neglog_ratio_survival(1.0, 2.0)}) {
      INFO(describe(d));
      CHECK(*survival(d, support(d).lo) == doctest::Approx(1.0).epsilon(1e-12));
      double prev = 1.0;
      for (double x = 0.0; x < 60.0; x += 0.25) {
        const double s = *survival(d, x);
        CHECK(s <= prev + 1e-15);
        prev = s;
      }
      CHECK(prev < 1e-24);
    }
  }

  TEST_CASE("survival-defined MGF matches the closed form where one exists") {
    // (1+x)^{-2} e^{-x}: E e^{sB} = 1 + s int_0^inf e^{-(1-s)x} (1+x)^{-2} dx.
    Distribution d = poly_exp_survival(1.0, 2.0);
    const double s = 0.4;
    const double expected =
        1.0 + s * oracle::simpson([&](double x) { return std::exp(-(1.0 - s) * x) / ((1.0 + x) * (1.0 + x)); }, 0.0,
                                  120.0, 200000);
    CHECK(mgf(d, s) == doctest::Approx(expected).epsilon(1e-8));
    CHECK(mgf_domain(d).right.at == 1.0);
    CHECK(mgf_domain(d).right.closed);
    CHECK(std::isfinite(mgf(d, 1.0)));
  }

  TEST_CASE("atoms are exact") {
    Distribution A = mixture({{0.5, point_mass(1.0)}, {0.5, uniform_law(0.0, 1.0)}});
    CHECK(atom_mass(A, 1.0) == 0.5);
    CHECK(atomic_mass(A) == 0.5);
    Rng rng(3);
    std::size_t ones = 0;
    const std::size_t n = 200'000;
    for (std::size_t i = 0; i < n; ++i) ones += sample(A, rng) == 1.0;
    CHECK(std::abs(static_cast<double>(ones) / n - 0.5) < 3.0 * std::sqrt(0.25 / n));
  }

  TEST_CASE("sample_above stays above the threshold") {
    Rng rng(5);
    for (const auto& d : {exponential(1.0), poly_exp_survival(1.0, 2.0), gamma_law(2.0, 1.0)}) {
      for (int i = 0; i < 1000; ++i) CHECK(sample_above(d, 3.0, rng) > 3.0);
    }
  }
}

TEST_SUITE("joint") {
  TEST_CASE("degenerate laws sample constant pairs") {
    auto j = JointInput::independent(point_mass(0.5), point_mass(2.0));
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
      const auto [a, b] = sample_pair(j, rng);
      CHECK(a == 0.5);
      CHECK(b == 2.0);
    }
  }

  TEST_CASE("threshold dependence sets A from B") {
    auto j = JointInput::threshold(exponential(1.0), 0.3, 0.7, 1.0);
    Rng rng(2);
    std::size_t above = 0, matched = 0;
    for (int i = 0; i < 100'000; ++i) {
      const auto [a, b] = sample_pair(j, rng);
      if (b > 1.0) {
        ++above;
        matched += a == 0.3;
      } else {
        CHECK(a == 0.7);
      }
    }
    CHECK(above > 0);
    CHECK(matched == above);
    CHECK_THROWS(JointInput::threshold(exponential(1.0), 0.5, 0.5, 1.0));
  }

  TEST_CASE("constant-A mixture has a quarter of its mass at zero") {
    Distribution B = constant_a_mixture(0.5, 1.0, 2.0);
    const std::size_t n = 1'000'000;
    const auto xs = draw(B, n, 17);
    const auto zeros = static_cast<double>(std::count(xs.begin(), xs.end(), 0.0));
    CHECK(std::abs(zeros / n - 0.25) <= 3.0 * std::sqrt(0.25 * 0.75 / n));
  }

  TEST_CASE("structural flags") {
    auto j = JointInput::independent(mixture({{0.5, point_mass(1.0)}, {0.5, uniform_law(0.0, 1.0)}}), exponential(2.0));
    const auto f = structural_flags(j);
    CHECK(*f.p_A_eq_1 == 0.5);
    CHECK(f.A_positive == Tri::True);
    CHECK(f.A_bounded_by_1 == Tri::True);
    CHECK(f.mgf_B_domain.right.at == 2.0);
    CHECK_FALSE(f.mgf_B_domain.right.closed);
    CHECK(std::isinf(f.mgf_B_domain.left.at));
    CHECK(f.p_A_eq_1.value_or(0) + f.p_A_eq_neg1.value_or(0) <= 1.0);

    // P{B > x} = C e^{-bx} + r(x) with a faster remainder: open right end at b.
    ExpPlusRemainderTail tail{0.5, 1.5, [](double x) { return 0.5 * std::exp(-3.0 * x); }};
    tail.remainder_rate = 1.5;
    Distribution B = survival_defined([](double x) { return 0.5 * std::exp(-1.5 * x) + 0.5 * std::exp(-3.0 * x); },
                                      0.0, TailModel{tail});
    const auto g = structural_flags(JointInput::independent(beta_law(2.0, 1.0), B));
    CHECK(g.mgf_B_domain.right.at == 1.5);
    CHECK_FALSE(g.mgf_B_domain.right.closed);
  }

  TEST_CASE("nondegeneracy") {
    auto fixed = validate_nondegeneracy(JointInput::independent(point_mass(0.5), point_mass(1.0)));
    CHECK_FALSE(fixed.ok);
    CHECK(fixed.failed == "no_constant_fixed_point");
    CHECK(*fixed.c == doctest::Approx(2.0));
    auto zero_a = validate_nondegeneracy(JointInput::independent(point_mass(0.0), exponential(1.0)));
    CHECK_FALSE(zero_a.ok);
    CHECK(zero_a.failed == "A_nonzero");
    CHECK(validate_nondegeneracy(JointInput::independent(beta_law(2.0, 1.0), exponential(1.0))).ok);
  }
}
