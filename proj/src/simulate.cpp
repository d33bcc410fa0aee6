#include "perpetuity/simulate.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "perpetuity/quadrature.hpp"

namespace perp {

namespace {

// Stream salts keep the independent draw families of one config apart.
constexpr std::uint64_t kSaltConditional = 0x636f6e646974696fULL;
constexpr std::uint64_t kSaltFixedPoint = 0x6669786564707473ULL;
constexpr std::uint64_t kSaltBound = 0x626f756e645a5a5aULL;
constexpr std::uint64_t kLogMomentSeed = 0x6c6f676d6f6d656eULL;

constexpr double kClamp = 1e300;

}  // namespace

PerpetuityDraw draw_perpetuity(const JointInput& joint, const SimConfig& cfg, Rng& rng) {
  if (cfg.mode == SimMode::FixedIterations) {
    double x = 0.0;
    for (std::size_t n = 0; n < cfg.iterations; ++n) {
      const auto [a, b] = sample_pair(joint, rng);
      x = a * x + b;
    }
    return {x, cfg.iterations, false};
  }
  double sum = 0.0;
  double prod = 1.0;
  for (std::size_t k = 1; k <= cfg.max_terms; ++k) {
    const auto [a, b] = sample_pair(joint, rng);
    sum += prod * b;
    prod *= a;
    if (std::abs(prod) <= cfg.truncation_eps) return {sum, k, false};
  }
  return {sum, cfg.max_terms, true};
}

SampleBatch sample_batch(const JointInput& joint, const SimConfig& cfg) {
  if (!cfg.override_convergence) {
    const ConvergenceReport conv = check_convergence(joint);
    if (conv.verdict == Convergence::Diverges) throw std::domain_error("perpetuity diverges: " + conv.evidence);
  }
  SampleBatch batch;
  batch.master_seed = cfg.master_seed;
  batch.values.resize(cfg.n_samples);
  const std::size_t chunks = (cfg.n_samples + kChunkSize - 1) / kChunkSize;
  std::vector<std::size_t> terms(chunks, 0);
  std::vector<std::size_t> truncated(chunks, 0);
  for_each_chunk(cfg.n_samples, cfg, 0, [&](Rng& rng, std::size_t lo, std::size_t hi) {
    const std::size_t c = lo / kChunkSize;
    for (std::size_t i = lo; i < hi; ++i) {
      const PerpetuityDraw d = draw_perpetuity(joint, cfg, rng);
      batch.values[i] = d.value;
      terms[c] += d.terms;
      truncated[c] += d.truncated ? 1 : 0;
    }
  });
  double total_terms = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    total_terms += static_cast<double>(terms[c]);
    batch.truncation.hit_max_terms += truncated[c];
  }
  if (cfg.n_samples > 0) batch.truncation.mean_terms = total_terms / static_cast<double>(cfg.n_samples);
  return batch;
}

std::string_view to_string(Convergence c) {
  switch (c) {
    case Convergence::Converges: return "converges";
    case Convergence::Diverges: return "diverges";
    default: return "unknown";
  }
}

ConvergenceReport check_convergence(const JointInput& joint) {
  ConvergenceReport r;
  if (const auto sym = expected_log_abs(joint.A())) {
    r.e_log_abs_A = *sym;
    r.e_log_symbolic = true;
  } else {
    Rng rng(kLogMomentSeed);
    std::vector<double> logs(100000);
    for (double& v : logs) v = std::log(std::abs(sample(joint.A(), rng)));
    const MeanEstimate m = mean_estimate(logs);
    r.e_log_abs_A = m.value;
    r.e_log_half_width = 3.0 * m.std_err;
  }
  r.log_moment_B = log_moment_finite(joint.B());

  char buf[160];
  std::snprintf(buf, sizeof buf, "E log|A| = %.6g%s", r.e_log_abs_A,
                r.e_log_symbolic ? " (symbolic)" : " (Monte Carlo)");
  r.evidence = buf;
  if (!r.e_log_symbolic) {
    std::snprintf(buf, sizeof buf, " +- %.3g", r.e_log_half_width);
    r.evidence += buf;
  }
  r.evidence += "; E log(1+|B|) finite: ";
  r.evidence += to_string(r.log_moment_B);

  if (r.e_log_abs_A - r.e_log_half_width >= 0.0) {
    r.verdict = Convergence::Diverges;
    r.evidence += "; E log|A| >= 0";
  } else if (r.e_log_abs_A + r.e_log_half_width < 0.0) {
    if (r.log_moment_B == Tri::True) r.verdict = Convergence::Converges;
    if (r.log_moment_B == Tri::False) r.verdict = Convergence::Diverges;
  }
  return r;
}

std::vector<TailEstimate> empirical_tail(const SampleBatch& batch, const std::vector<double>& xs) {
  if (batch.values.empty()) throw std::invalid_argument("empirical_tail: empty batch");
  std::vector<double> sorted = batch.values;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  std::vector<TailEstimate> out;
  for (double x : xs) {
    const auto above = static_cast<std::size_t>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), x));
    const double p = static_cast<double>(above) / static_cast<double>(n);
    out.push_back({x, p, binomial_sigma(p, n), TailMethod::Empirical});
  }
  return out;
}

std::vector<TailEstimate> conditional_tail_estimate(const JointInput& joint, const SimConfig& cfg,
                                                    const std::vector<double>& xs) {
  if (!joint.is_independent()) {
    throw std::invalid_argument("conditional tail estimate needs independent A and B");
  }
  const auto probe = survival_eval(joint.B(), 0.0);
  if (!probe || !probe->exact) {
    throw std::invalid_argument("conditional tail estimate needs a closed-form survival of B");
  }
  const std::size_t n = cfg.n_samples;
  std::vector<double> shift(n);  // a * x'
  for_each_chunk(n, cfg, kSaltConditional, [&](Rng& rng, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const double xp = draw_perpetuity(joint, cfg, rng).value;
      shift[i] = sample(joint.A(), rng) * xp;
    }
  });
  std::vector<TailEstimate> out;
  std::vector<double> w(n);
  for (double x : xs) {
    for (std::size_t i = 0; i < n; ++i) w[i] = survival(joint.B(), x - shift[i]).value();
    const MeanEstimate m = median_of_means(w);
    out.push_back({x, std::clamp(m.value, 0.0, 1.0), m.std_err, TailMethod::ConditionalSmoothed});
  }
  return out;
}

TailEstimate conditional_tail_estimate(const JointInput& joint, const SimConfig& cfg, double x) {
  return conditional_tail_estimate(joint, cfg, std::vector<double>{x}).front();
}

ExpMomentEstimate exp_moment_from_values(const std::vector<double>& xs, double r) {
  ExpMomentEstimate out;
  out.r = r;
  std::vector<double> v(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double e = std::exp(r * xs[i]);
    if (!(e <= kClamp)) {
      e = kClamp;
      ++out.overflow_count;
    }
    v[i] = e;
  }
  out.estimate = mean_estimate(v);

  // Average log(max/sum) over 16 disjoint blocks to steady the slope.
  constexpr std::size_t kMinPrefix = 64;
  const std::size_t groups = v.size() >= 16 * 2 * kMinPrefix ? 16 : 1;
  const std::size_t len = v.size() / groups;
  std::vector<double> log_frac;
  for (std::size_t n = kMinPrefix; n <= len; n *= 2) {
    double acc = 0.0;
    for (std::size_t g = 0; g < groups; ++g) {
      double mx = 0.0;
      double sum = 0.0;
      for (std::size_t i = g * len; i < g * len + n; ++i) {
        mx = std::max(mx, v[i]);
        sum += v[i];
      }
      acc += std::log(sum > 0.0 ? mx / sum : 1.0);
    }
    out.prefix_sizes.push_back(n);
    out.max_fraction.push_back(std::exp(acc / static_cast<double>(groups)));
    log_frac.push_back(acc / static_cast<double>(groups));
  }
  if (log_frac.size() >= 2) {
    double mx = 0.0;
    double my = 0.0;
    const auto k = static_cast<double>(log_frac.size());
    for (std::size_t i = 0; i < log_frac.size(); ++i) {
      mx += std::log(static_cast<double>(out.prefix_sizes[i]));
      my += log_frac[i];
    }
    mx /= k;
    my /= k;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < log_frac.size(); ++i) {
      const double dx = std::log(static_cast<double>(out.prefix_sizes[i])) - mx;
      sxy += dx * (log_frac[i] - my);
      sxx += dx * dx;
    }
    out.decay_exponent = -sxy / sxx;
    out.suspect_infinite = out.decay_exponent < kSuspectInfiniteDecay;
  }
  if (out.overflow_count > 0) out.suspect_infinite = true;
  return out;
}

ExpMomentEstimate estimate_exp_moment(const JointInput& joint, const SimConfig& cfg, double r) {
  return exp_moment_from_values(sample_batch(joint, cfg).values, r);
}

FixedPointCheck fixed_point_check(const JointInput& joint, const SimConfig& cfg, double r) {
  FixedPointCheck out;
  const SampleBatch batch = sample_batch(joint, cfg);
  std::vector<double> lhs(batch.values.size());
  for (std::size_t i = 0; i < lhs.size(); ++i) lhs[i] = std::exp(r * batch.values[i]);
  out.lhs = mean_estimate(lhs);

  std::vector<double> rhs(cfg.n_samples);
  for_each_chunk(cfg.n_samples, cfg, kSaltFixedPoint, [&](Rng& rng, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const auto [a, b] = sample_pair(joint, rng);
      const double xp = draw_perpetuity(joint, cfg, rng).value;
      rhs[i] = std::exp(r * b + r * a * xp);
    }
  });
  out.rhs = mean_estimate(rhs);
  out.difference = out.lhs.value - out.rhs.value;
  out.combined_sigma = std::hypot(out.lhs.std_err, out.rhs.std_err);
  return out;
}

namespace {

// E e^{bB} 1{B > q} = e^{bq} S(q) + b * int_q^inf e^{bx} S(x) dx.
double truncated_exp_moment(const Distribution& B, double b, double q) {
  const double sq = survival(B, q).value();
  auto integrand = [&](double x) { return std::exp(b * (x - q) + log_survival(B, x).value()); };
  const auto quad = integrate_to_infinity(integrand, q, 1e-10);
  if (!quad.converged) throw std::runtime_error("stochastic bound: E e^{bB} 1{B>q} did not converge");
  return std::exp(b * q) * (sq + b * quad.value);
}

}  // namespace

double survival_Y(const StochasticBound& sb, const Distribution& B, double x) {
  if (x < 0.0) return 1.0;
  return survival(B, std::max(sb.q, x - sb.d)).value();
}

double survival_Z(const StochasticBound& sb, const Distribution& B, double x) {
  if (x < sb.x0) return 1.0;
  return survival_Y(sb, B, x) / sb.p_Y_ge_x0;
}

double sample_Z(const StochasticBound& sb, const Distribution& B, Rng& rng) {
  if (sb.x0 <= 0.0) {
    const double v = sample(B, rng);
    return v > sb.q ? v + sb.d : 0.0;
  }
  return sample_above(B, std::max(sb.q, sb.x0 - sb.d), rng) + sb.d;
}

StochasticBound construct_stochastic_bound(const JointInput& joint, const SimConfig& cfg) {
  const StructuralFlags flags = structural_flags(joint);
  if (flags.A_positive != Tri::True || flags.A_at_most_1 != Tri::True) {
    throw std::invalid_argument("stochastic bound: requires P{A in (0,1]} = 1");
  }
  const auto tail = tail_model(joint.B());
  const auto* g = tail ? std::get_if<GammaLikeTail>(&*tail) : nullptr;
  if (!g || !(g->c < -1.0)) throw std::invalid_argument("stochastic bound: requires a gamma-like tail with c < -1");
  if (!survival_eval(joint.B(), 0.0) || !survival_eval(joint.B(), 0.0)->exact) {
    throw std::invalid_argument("stochastic bound: requires a closed-form survival of B");
  }

  StochasticBound sb;
  sb.b = g->b;
  const auto on_one = mgf_B_on_A_atom(joint, sb.b, 1.0);
  if (!on_one) throw std::invalid_argument("stochastic bound: E e^{bB} 1{A=1} unavailable");
  if (!(*on_one < 1.0)) throw std::invalid_argument("stochastic bound: requires E e^{bB} 1{A=1} < 1");

  // q with the weighted sum halfway between E e^{bB}1{A=1} and 1.
  const double target = 0.5 * (1.0 + *on_one);
  const double start = std::max(0.0, support(joint.B()).lo);
  for (int k = 0;; ++k) {
    if (k > 40000) throw std::runtime_error("stochastic bound: no admissible q found");
    sb.q = start + 0.25 * k;
    sb.weighted_sum = *on_one + truncated_exp_moment(joint.B(), sb.b, sb.q);
    if (sb.weighted_sum < target) break;
  }
  sb.p_B_le_q = 1.0 - survival(joint.B(), sb.q).value();
  // e^{bd} twice the required lower bound.
  sb.d = (sb.p_B_le_q > 0.0) ? std::max(std::log(2.0 * sb.p_B_le_q / (1.0 - sb.weighted_sum)) / sb.b, 0.0) : 0.0;
  if (sb.d <= 0.0) sb.d = 1.0 / sb.b;

  // Empirical P{AY + B > x} against the exact P{Y > x} on a grid.
  const std::size_t n = cfg.n_samples;
  std::vector<double> v(n);
  StochasticBound plain = sb;
  plain.x0 = 0.0;
  for_each_chunk(n, cfg, kSaltBound, [&](Rng& rng, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const auto [a, b] = sample_pair(joint, rng);
      v[i] = a * sample_Z(plain, joint.B(), rng) + b;
    }
  });
  std::sort(v.begin(), v.end());
  std::vector<double> grid;
  for (double x = 0.0; survival_Y(sb, joint.B(), x) * static_cast<double>(n) >= 50.0; x += 0.25) grid.push_back(x);
  std::size_t first_ok = grid.size();
  for (std::size_t j = grid.size(); j-- > 0;) {
    const double x = grid[j];
    const auto above = static_cast<double>(v.end() - std::upper_bound(v.begin(), v.end(), x));
    if (above / static_cast<double>(n) > survival_Y(sb, joint.B(), x)) break;
    first_ok = j;
  }
  sb.x0 = (first_ok < grid.size()) ? grid[first_ok] : (grid.empty() ? 0.0 : grid.back() + 0.25);
  sb.p_Y_ge_x0 = (sb.x0 <= 0.0) ? 1.0 : survival_Y(sb, joint.B(), sb.x0);
  return sb;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_batch_csv(std::ostream& os, const SampleBatch& batch, std::uint64_t config_hash) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "# config_hash=%016llx\n", static_cast<unsigned long long>(config_hash));
  os << buf;
  os << "# seed=" << batch.master_seed << "\n";
  os << "x\n";
  for (double v : batch.values) {
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    os.write(buf, res.ptr - buf);
    os.put('\n');
  }
}

}  // namespace perp
