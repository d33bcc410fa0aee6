#pragma once

// Monte Carlo for X = sum_k A_1...A_{k-1} B_k and the chain X_n = A_n X_{n-1} + B_n.
//
// Every batch is split into fixed chunks of kChunkSize draws; chunk i always
// draws from the stream derive_seed(master_seed ^ salt, i), whichever worker
// runs it. Results are therefore identical for any n_streams.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "perpetuity/joint.hpp"
#include "perpetuity/rng.hpp"
#include "perpetuity/stats.hpp"

namespace perp {

enum class SimMode { SeriesTruncation, FixedIterations };

struct SimConfig {
  std::size_t n_samples = 0;
  std::uint64_t master_seed = 0;
  double truncation_eps = 1e-16;
  std::size_t max_terms = 1'000'000;
  std::size_t n_streams = 1;
  SimMode mode = SimMode::SeriesTruncation;
  std::size_t iterations = 0;  // FixedIterations only
  /// Simulate even when the convergence check reports divergence.
  bool override_convergence = false;
};

inline constexpr std::size_t kChunkSize = 4096;

struct TruncationReport {
  double mean_terms = 0.0;
  std::size_t hit_max_terms = 0;
};

struct SampleBatch {
  std::vector<double> values;
  TruncationReport truncation;
  std::uint64_t master_seed = 0;
  std::size_t chunk_size = kChunkSize;
};

struct PerpetuityDraw {
  double value;
  std::size_t terms;
  bool truncated;
};

/// Partial sum up to the first n with |A_1...A_n| <= truncation_eps (capped at
/// max_terms), or the chain after `iterations` steps from X_0 = 0.
PerpetuityDraw draw_perpetuity(const JointInput& joint, const SimConfig& cfg, Rng& rng);

/// Runs fn(rng, begin, end) over the fixed chunks of [0, n) on cfg.n_streams
/// worker threads. Chunk i uses make_stream(cfg.master_seed ^ salt, i).
template <class Fn>
void for_each_chunk(std::size_t n, const SimConfig& cfg, std::uint64_t salt, Fn&& fn) {
  const std::size_t chunks = (n + kChunkSize - 1) / kChunkSize;
  const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.n_streams, chunks));
  auto run = [&](std::size_t w) {
    for (std::size_t c = w; c < chunks; c += workers) {
      Rng rng = make_stream(cfg.master_seed ^ salt, c);
      fn(rng, c * kChunkSize, std::min(n, (c + 1) * kChunkSize));
    }
  };
  if (workers == 1) {
    run(0);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        run(w);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// n_samples independent draws. Throws std::domain_error when the convergence
/// check reports divergence and the config does not override it.
SampleBatch sample_batch(const JointInput& joint, const SimConfig& cfg);

enum class Convergence { Converges, Diverges, Unknown };
std::string_view to_string(Convergence c);

struct ConvergenceReport {
  Convergence verdict = Convergence::Unknown;
  double e_log_abs_A = 0.0;
  bool e_log_symbolic = false;
  double e_log_half_width = 0.0;  // 3-sigma half width when estimated
  Tri log_moment_B = Tri::Unknown;
  std::string evidence;
};

/// Checks E log|A| < 0 and E log(1 + |B|) < inf, symbolically where possible
/// and otherwise from 1e5 draws of A.
ConvergenceReport check_convergence(const JointInput& joint);

enum class TailMethod { Empirical, ConditionalSmoothed };

struct TailEstimate {
  double x;
  double p_hat;
  double std_err;
  TailMethod method;
};

std::vector<TailEstimate> empirical_tail(const SampleBatch& batch, const std::vector<double>& xs);

/// Averages P{B > x - a x'} over fresh independent draws of A and of the
/// perpetuity, aggregated by median-of-means over 32 blocks. Requires an
/// independent joint with closed-form survival of B.
std::vector<TailEstimate> conditional_tail_estimate(const JointInput& joint, const SimConfig& cfg,
                                                    const std::vector<double>& xs);
TailEstimate conditional_tail_estimate(const JointInput& joint, const SimConfig& cfg, double x);

struct ExpMomentEstimate {
  double r = 0.0;
  MeanEstimate estimate;
  std::vector<std::size_t> prefix_sizes;
  /// Largest summand over the total, per prefix.
  std::vector<double> max_fraction;
  /// Minus the least-squares slope of log(max_fraction) against log(n).
  double decay_exponent = 0.0;
  bool suspect_infinite = false;
  std::size_t overflow_count = 0;
};

inline constexpr double kSuspectInfiniteDecay = 0.25;

/// Sample mean of e^{r X} with the largest-summand diagnostic over doubling
/// prefixes starting at 256. Values of e^{rX} above 1e300 are clamped and
/// counted.
ExpMomentEstimate estimate_exp_moment(const JointInput& joint, const SimConfig& cfg, double r);
ExpMomentEstimate exp_moment_from_values(const std::vector<double>& xs, double r);

struct FixedPointCheck {
  MeanEstimate lhs;  // psi(r) from perpetuity draws
  MeanEstimate rhs;  // E e^{rB} psi(rA) from fresh (A, B, X') triples
  double difference = 0.0;
  double combined_sigma = 0.0;
};

FixedPointCheck fixed_point_check(const JointInput& joint, const SimConfig& cfg, double r);

/// Y = (B' + d) 1{B' > q} and Z = Y conditioned on Y >= x0, with A Z + B
/// dominated stochastically by Z. Built for A in (0,1] and B with a gamma-like
/// tail of exponent c < -1.
struct StochasticBound {
  double b = 0.0;
  double q = 0.0;
  double d = 0.0;
  double x0 = 0.0;
  double weighted_sum = 0.0;  // E e^{bB} 1{A=1} + E e^{bB} 1{B>q}
  double p_B_le_q = 0.0;
  double p_Y_ge_x0 = 0.0;
};

/// Picks q, d with margin and finds x0 by a grid search comparing an
/// empirical P{AY + B > x} (cfg.n_samples draws) with the exact P{Y > x}.
StochasticBound construct_stochastic_bound(const JointInput& joint, const SimConfig& cfg);
double survival_Y(const StochasticBound& sb, const Distribution& B, double x);
double survival_Z(const StochasticBound& sb, const Distribution& B, double x);
double sample_Z(const StochasticBound& sb, const Distribution& B, Rng& rng);

std::uint64_t fnv1a64(std::string_view bytes);

/// Single-column CSV `x` preceded by comment lines with the config hash and
/// seed. Values are written with 17 significant digits.
void write_batch_csv(std::ostream& os, const SampleBatch& batch, std::uint64_t config_hash);

}  // namespace perp
