#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "perpetuity/distribution.hpp"
#include "perpetuity/simulate.hpp"
#include "perpetuity/stats.hpp"
#include "support/oracles.hpp"

using namespace perp;

namespace {

SimConfig config(std::size_t n, std::uint64_t seed) {
  SimConfig c;
  c.n_samples = n;
  c.master_seed = seed;
  return c;
}

JointInput example1() { return JointInput::independent(beta_law(2.0, 1.0), exponential(1.0)); }
JointInput half_exp() { return JointInput::independent(point_mass(0.5), exponential(1.0)); }

std::vector<double> sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_SUITE("simulate") {
  TEST_CASE("geometric series for constant A and B") {
    auto j = JointInput::independent(point_mass(0.5), point_mass(1.0));
    Rng rng(1);
    const auto d = draw_perpetuity(j, config(1, 1), rng);
    CHECK(d.value == doctest::Approx(2.0).epsilon(1e-15));
    CHECK_FALSE(d.truncated);
  }

  TEST_CASE("Beta(2,1)/Exp(1) draws fit Gamma(3,1)") {
    const std::size_t n = 100'000;
    const auto batch = sample_batch(example1(), config(n, 42));
    const auto xs = sorted(batch.values);
    const double ks = ks_one_sample(xs, [](double x) { return 1.0 - oracle::erlang_survival(3, 1.0, x); });
    // 1e-3 critical value of the one-sample KS statistic.
    CHECK(ks < 1.95 / std::sqrt(static_cast<double>(n)));
    CHECK(batch.truncation.hit_max_terms == 0);
  }

  TEST_CASE("constant-A mixture gives the two-sided exponential tail") {
    const double g = 0.5, a = 1.0, b = 2.0;
    Distribution B = mixture({{g * g, point_mass(0.0)},
                              {g * (1.0 - g), exponential(a)},
                              {g * (1.0 - g), negated(exponential(b))},
                              {(1.0 - g) * (1.0 - g), difference(exponential(a), exponential(b))}});
    const std::size_t n = 200'000;
    const auto batch = sample_batch(JointInput::independent(point_mass(g), B), config(n, 9));
    const auto t = empirical_tail(batch, {2.0});
    const double exact = b / (a + b) * std::exp(-2.0);
    CHECK(exact == doctest::Approx(0.0902235).epsilon(1e-6));
    CHECK(std::abs(t[0].p_hat - exact) <= 3.0 * binomial_sigma(exact, n));
  }

  TEST_CASE("batches are deterministic and independent of the stream count") {
    CHECK(sample_batch(example1(), config(0, 1)).values.empty());
    auto c1 = config(20'000, 77);
    auto c8 = c1;
    c8.n_streams = 8;
    const auto a = sample_batch(example1(), c1);
    const auto b = sample_batch(example1(), c1);
    const auto c = sample_batch(example1(), c8);
    CHECK(a.values == b.values);
    CHECK(a.values == c.values);
    CHECK(a.truncation.mean_terms == c.truncation.mean_terms);
    std::ostringstream s1, s8;
    write_batch_csv(s1, a, 123);
    write_batch_csv(s8, c, 123);
    CHECK(s1.str() == s8.str());
    const auto d = sample_batch(example1(), config(20'000, 78));
    CHECK(a.values != d.values);
  }

  TEST_CASE("CSV layout") {
    SampleBatch batch;
    batch.values = {0.1, 2.5};
    batch.master_seed = 5;
    std::ostringstream os;
    write_batch_csv(os, batch, 0xabcdef);
    CHECK(os.str() == "# config_hash=0000000000abcdef\n# seed=5\nx\n0.1\n2.5\n");
  }

  TEST_CASE("convergence check") {
    auto half = check_convergence(half_exp());
    CHECK(half.verdict == Convergence::Converges);
    CHECK(half.e_log_symbolic);
    CHECK(half.e_log_abs_A == doctest::Approx(-std::log(2.0)).epsilon(1e-15));

    auto big = check_convergence(JointInput::independent(point_mass(1.5), exponential(1.0)));
    CHECK(big.verdict == Convergence::Diverges);
    CHECK_THROWS_AS(sample_batch(JointInput::independent(point_mass(1.5), exponential(1.0)), config(10, 1)),
                    std::domain_error);

    for (double lambda : {0.5, 1.0, 3.0}) {
      auto r = check_convergence(JointInput::independent(beta_law(lambda, 1.0), exponential(1.0)));
      CHECK(r.e_log_symbolic);
      CHECK(r.e_log_abs_A == doctest::Approx(-1.0 / lambda).epsilon(1e-14));
    }
  }

  TEST_CASE("max_terms cap is honoured and reported") {
    auto c = config(1000, 3);
    c.max_terms = 8;
    const auto batch = sample_batch(example1(), c);
    CHECK(batch.truncation.hit_max_terms == 1000);
    CHECK(batch.truncation.mean_terms == 8.0);
  }

  TEST_CASE("doubling max_terms leaves the Gamma(3,1) fit unchanged") {
    auto cdf = [](double x) { return 1.0 - oracle::erlang_survival(3, 1.0, x); };
    auto c = config(100'000, 4);
    const auto a = sample_batch(example1(), c);
    c.max_terms *= 2;
    const auto b = sample_batch(example1(), c);
    CHECK(std::abs(ks_one_sample(sorted(a.values), cdf) - ks_one_sample(sorted(b.values), cdf)) < 1e-4);
  }

  TEST_CASE("empirical tail") {
    SampleBatch twos;
    twos.values.assign(100, 2.0);
    auto t = empirical_tail(twos, {1.0, 3.0});
    CHECK(t[0].p_hat == 1.0);
    CHECK(t[0].std_err == 0.0);
    CHECK(t[1].p_hat == 0.0);

    SampleBatch g;
    Rng rng(8);
    Distribution G = gamma_law(3.0, 1.0);
    g.values.resize(1'000'000);
    for (auto& v : g.values) v = sample(G, rng);
    auto e = empirical_tail(g, {5.0});
    CHECK(std::abs(e[0].p_hat - 0.124652) <= 3.0 * 0.00033);
  }

  TEST_CASE("conditional tail estimate") {
    const double predicted = oracle::half_power_product() * std::exp(-8.0);
    auto at8 = conditional_tail_estimate(half_exp(), config(200'000, 12), 8.0);
    CHECK(at8.method == TailMethod::ConditionalSmoothed);
    CHECK(std::abs(at8.p_hat / predicted - 1.0) < 0.10);

    auto far = conditional_tail_estimate(half_exp(), config(10'000, 12), -1e6);
    CHECK(far.p_hat == 1.0);

    // Self-consistency with indicator exceedances where p is about 1e-3.
    const double x = 8.15;
    const auto batch = sample_batch(half_exp(), config(1'000'000, 13));
    const auto emp = empirical_tail(batch, {x})[0];
    const auto cond = conditional_tail_estimate(half_exp(), config(200'000, 14), x);
    CHECK(emp.p_hat > 5e-4);
    CHECK(std::abs(emp.p_hat - cond.p_hat) <= 3.0 * std::hypot(emp.std_err, cond.std_err));

    CHECK_THROWS_AS(conditional_tail_estimate(JointInput::threshold(exponential(1.0), 0.3, 0.7, 1.0), config(10, 1), 1.0),
                    std::invalid_argument);
  }

  TEST_CASE("exponential moment estimates") {
    auto zero = estimate_exp_moment(half_exp(), config(10'000, 1), 0.0);
    CHECK(zero.estimate.value == 1.0);

    auto half = estimate_exp_moment(half_exp(), config(200'000, 2), 0.5);
    // psi(0.5) = prod_{k>=0} (1 - 0.5^{k+1})^{-1}.
    CHECK(std::abs(half.estimate.value - oracle::half_power_product()) <= 3.0 * half.estimate.std_err);
    CHECK_FALSE(half.suspect_infinite);

    auto over = estimate_exp_moment(half_exp(), config(200'000, 3), 1.5);
    CHECK(over.suspect_infinite);
  }

  TEST_CASE("fixed-point identity psi(r) = E e^{rB} psi(rA)") {
    auto fp = fixed_point_check(half_exp(), config(200'000, 21), 0.5);
    CHECK(std::abs(fp.difference) <= 3.0 * fp.combined_sigma);
    CHECK(fp.combined_sigma > 0.0);
  }

  TEST_CASE("distributional fixed point X = A X' + B") {
    const std::size_t n = 100'000;
    const auto xs = sorted(sample_batch(example1(), config(n, 31)).values);
    const auto xp = sample_batch(example1(), config(n, 32)).values;
    Rng rng(33);
    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto [a, b] = sample_pair(example1(), rng);
      ys[i] = a * xp[i] + b;
    }
    std::sort(ys.begin(), ys.end());
    CHECK(ks_two_sample(xs, ys) < ks_two_sample_critical(n, n, 1e-3));
  }

  TEST_CASE("stochastic bound A Z + B <= Z") {
    auto j = JointInput::independent(uniform_law(0.0, 1.0), poly_exp_survival(1.0, 2.0));
    const auto sb = construct_stochastic_bound(j, config(200'000, 41));
    CHECK(sb.weighted_sum < 1.0);
    CHECK(sb.d > 0.0);
    CHECK(sb.x0 >= 0.0);
    // e^{bd} (1 - weighted) >= P{B <= q}, the coupling requirement.
    CHECK(std::exp(sb.b * sb.d) * (1.0 - sb.weighted_sum) >= sb.p_B_le_q);

    const std::size_t n = 200'000;
    Rng rng(42);
    std::vector<double> v(n);
    for (auto& x : v) {
      const auto [a, b] = sample_pair(j, rng);
      x = a * sample_Z(sb, j.B(), rng) + b;
    }
    std::sort(v.begin(), v.end());
    for (int k = 0; k < 20; ++k) {
      const double x = sb.x0 + 0.5 * k;
      const double p_hat = static_cast<double>(v.end() - std::upper_bound(v.begin(), v.end(), x)) / n;
      CHECK(p_hat <= survival_Z(sb, j.B(), x) + 3.0 * binomial_sigma(p_hat, n));
    }
    CHECK_THROWS_AS(construct_stochastic_bound(example1(), config(10, 1)), std::invalid_argument);
  }
}
