#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <string>

#include "perpetuity/criteria.hpp"
#include "perpetuity/distribution.hpp"

using namespace perp;

namespace {

JointInput ind(Distribution a, Distribution b) { return JointInput::independent(std::move(a), std::move(b)); }

Distribution atoms2(double w1, double v1, double w2, double v2) {
  return mixture({{w1, point_mass(v1)}, {w2, point_mass(v2)}});
}

std::optional<double> witness(const MomentVerdict& v, const std::string& name) {
  for (const auto& c : v.condition_trace) {
    for (const auto& w : c.witnesses) {
      if (w.name == name) return w.value;
    }
  }
  return std::nullopt;
}

}  // namespace

TEST_SUITE("criteria") {
  TEST_CASE("positive A") {
    auto j = ind(beta_law(2.0, 1.0), exponential(1.0));
    CHECK(support_unbounded_right(j) == Tri::True);
    auto fin = exp_moment_criterion_positiveA(j, 0.5, Tri::True);
    CHECK(fin.verdict == Verdict::Finite);
    CHECK(fin.theorem_used == kPositiveA);
    CHECK(*witness(fin, "phi(r)") == doctest::Approx(2.0));
    CHECK(exp_moment_criterion_positiveA(j, 1.5, Tri::True).verdict == Verdict::Infinite);
    // Endpoint of the MGF domain: E e^{B} = inf.
    CHECK(exp_moment_criterion_positiveA(j, 1.0, Tri::True).verdict == Verdict::Infinite);
    // Unknown support cannot use the converse.
    CHECK(exp_moment_criterion_positiveA(j, 1.5, Tri::Unknown).verdict == Verdict::Inconclusive);
    CHECK_THROWS_AS(exp_moment_criterion_positiveA(ind(point_mass(-0.5), exponential(1.0)), 0.5, Tri::True),
                    DispatchError);
  }

  TEST_CASE("weighted MGF must be strictly below one") {
    auto A = mixture({{0.5, point_mass(1.0)}, {0.5, uniform_law(0.0, 1.0)}});
    auto j = ind(A, exponential(2.0));
    auto v = exp_moment_criterion_positiveA(j, 1.0, Tri::True);
    CHECK(*witness(v, "E e^{rB}1{A=1}") == doctest::Approx(1.0));
    CHECK(v.verdict == Verdict::Infinite);
    CHECK(exp_moment_criterion_positiveA(j, 0.5, Tri::True).verdict == Verdict::Finite);
  }

  TEST_CASE("mixed-sign A") {
    CHECK(exp_moment_criterion_mixedA(ind(atoms2(0.5, 0.5, 0.5, -0.5), exponential(2.0)), 1.0).verdict ==
          Verdict::Finite);
    auto neg = exp_moment_criterion_mixedA(ind(point_mass(-0.5), exponential(1.0)), 0.5);
    CHECK(neg.verdict == Verdict::Finite);
    CHECK(neg.theorem_used == kMixedSignA);
    CHECK(*witness(neg, "E e^{r(B1+A1B2)}") == doctest::Approx(1.6).epsilon(1e-14));
    CHECK(exp_moment_criterion_mixedA(ind(point_mass(-0.5), exponential(1.0)), 1.2).verdict == Verdict::Infinite);
    // Both signs for A and a two-sided B is an open case.
    auto open = exp_moment_criterion_mixedA(ind(atoms2(0.5, 0.5, 0.5, -0.5), difference(exponential(1.0), exponential(1.0))), 0.5);
    CHECK(open.verdict == Verdict::Inconclusive);
    CHECK(open.note.find("no criterion") != std::string::npos);
    CHECK_THROWS_AS(exp_moment_criterion_mixedA(ind(atoms2(0.3, -1.0, 0.7, 0.5), exponential(1.0)), 0.5), DispatchError);
  }

  TEST_CASE("two-sided criterion") {
    auto a = two_sided_criterion(ind(point_mass(0.5), exponential(2.0)), 1.0);
    CHECK(a.verdict == Verdict::Finite);
    CHECK(a.theorem_used == kAbsExpMoment);

    auto b = two_sided_criterion(ind(atoms2(0.3, -1.0, 0.7, 0.5), point_mass(0.1)), 1.0);
    CHECK(b.verdict == Verdict::Finite);
    CHECK(*witness(b, "lhs") == doctest::Approx(0.09).epsilon(1e-14));
    CHECK(*witness(b, "1-E e^{-rB}1{A=1}") == 1.0);
    CHECK(*witness(b, "1-E e^{rB}1{A=1}") == 1.0);

    auto c = two_sided_criterion(ind(atoms2(0.999, -1.0, 0.001, 0.5), exponential(1.0)), 0.9);
    CHECK(c.verdict == Verdict::Infinite);
    CHECK(*witness(c, "lhs") == doctest::Approx(0.999 * 0.999 * 10.0 / 1.9).epsilon(1e-12));

    CHECK_THROWS_AS(two_sided_criterion(ind(atoms2(0.5, -1.0, 0.5, 1.0), exponential(1.0)), 0.5), DispatchError);
  }

  TEST_CASE("expected psi(rA)") {
    CHECK(expected_psi_criterion(ind(beta_law(2.0, 1.0), exponential(1.0)), 1.0).verdict == Verdict::Infinite);
    auto a = expected_psi_criterion(ind(point_mass(0.5), exponential(1.0)), 1.0);
    CHECK(a.verdict == Verdict::Finite);
    CHECK(a.theorem_used == kExpectedPsi);
    CHECK(expected_psi_criterion(ind(point_mass(-0.5), exponential(1.0)), 1.0).verdict == Verdict::Finite);
    CHECK_THROWS_AS(expected_psi_criterion(JointInput::threshold(exponential(1.0), 0.3, 0.7, 1.0), 0.5),
                    DispatchError);
  }

  TEST_CASE("closed-form table for scaled MGFs") {
    auto e = expected_mgf_of_scaled(atoms2(0.5, 0.5, 0.5, -0.5), exponential(2.0), 1.0);
    CHECK(e.finite == Tri::True);
    // 0.5 * 2/(2-0.5) + 0.5 * 2/(2+0.5)
    CHECK(*e.value == doctest::Approx(0.5 * 2.0 / 1.5 + 0.5 * 2.0 / 2.5).epsilon(1e-14));
    CHECK(expected_mgf_of_scaled(beta_law(2.0, 1.0), exponential(1.0), 1.0).finite == Tri::False);
    auto p = expected_mgf_of_product(point_mass(-0.5), exponential(1.0), 1.0);
    CHECK(*p.value == doctest::Approx(1.0 / 0.75).epsilon(1e-14));
  }

  TEST_CASE("dispatch is total and names its theorem") {
    const std::set<std::string> known = {kPositiveA, kMixedSignA, kAbsExpMoment, kNoTheorem};
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.05, 0.95), val(-1.5, 1.5), rr(0.1, 3.0);
    auto random_law = [&](int kind, bool for_a) -> Distribution {
      switch (kind) {
        case 0: return point_mass(for_a ? val(rng) : val(rng) + 2.0);
        case 1: return exponential(0.5 + 2.0 * u(rng));
        case 2: return negated(gamma_law(1.0 + u(rng), 1.0));
        case 3: return atoms2(0.5, val(rng), 0.5, val(rng));
        case 4: return beta_law(1.0 + u(rng), 1.0 + u(rng));
        case 5: return mixture({{0.4, point_mass(-1.0)}, {0.6, uniform_law(-0.5, 0.9)}});
        default: return difference(exponential(1.0), exponential(2.0));
      }
    };
    int counted = 0;
    for (int k = 0; k < 300; ++k) {
      Distribution A = random_law(static_cast<int>(rng() % 6), true);
      if (atom_mass(A, 0.0) > 0.0) continue;
      Distribution B = random_law(static_cast<int>(rng() % 7), false);
      const auto j = ind(A, B);
      MomentVerdict v;
      CHECK_NOTHROW(v = exp_moment_verdict(j, rr(rng), support_unbounded_right(j)));
      CHECK(known.count(v.theorem_used) == 1);
      if (v.theorem_used == kNoTheorem) CHECK_FALSE(v.note.empty());
      ++counted;
    }
    CHECK(counted > 200);
  }

  TEST_CASE("verdict JSON") {
    auto v = exp_moment_verdict(ind(beta_law(2.0, 1.0), exponential(1.0)), 0.5, Tri::True);
    const auto js = to_json(v);
    CHECK(js["verdict"] == "Finite");
    CHECK(js["theorem_used"] == kPositiveA);
    CHECK(js["condition_trace"].is_array());
    CHECK(json_number(INFINITY) == "inf");
    CHECK(json_number(1.5) == 1.5);
  }
}
