#include "perpetuity/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace perp {

double ks_one_sample(std::span<const double> sorted, const std::function<double(double)>& cdf) {
  const auto n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<double>(a.size());
  const auto m = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return d;
}

double ks_two_sample_critical(std::size_t n, std::size_t m, double alpha) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const auto dn = static_cast<double>(n);
  const auto dm = static_cast<double>(m);
  return c * std::sqrt((dn + dm) / (dn * dm));
}

MeanEstimate mean_estimate(std::span<const double> values) {
  MeanEstimate out;
  if (values.empty()) return out;
  const auto n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  out.value = sum / n;
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.value) * (v - out.value);
  out.std_err = std::sqrt(ss / (n - 1.0) / n);
  return out;
}

MeanEstimate median_of_means(std::span<const double> values, std::size_t blocks) {
  if (blocks == 0) throw std::invalid_argument("median_of_means: blocks must be positive");
  if (values.size() < blocks) return mean_estimate(values);
  const std::size_t per = values.size() / blocks;
  std::vector<double> means;
  means.reserve(blocks);
  for (std::size_t k = 0; k < blocks; ++k) {
    // The last block absorbs the remainder.
    const std::size_t lo = k * per;
    const std::size_t hi = (k + 1 == blocks) ? values.size() : lo + per;
    means.push_back(mean_estimate(values.subspan(lo, hi - lo)).value);
  }
  const MeanEstimate spread = mean_estimate(means);
  const double sd = spread.std_err * std::sqrt(static_cast<double>(blocks));
  std::vector<double> sorted = means;
  std::sort(sorted.begin(), sorted.end());
  const double median = (blocks % 2 == 1) ? sorted[blocks / 2] : 0.5 * (sorted[blocks / 2 - 1] + sorted[blocks / 2]);
  return {median, std::sqrt(std::numbers::pi / 2.0) * sd / std::sqrt(static_cast<double>(blocks))};
}

double binomial_sigma(double p, std::size_t n) {
  if (n == 0) return 0.0;
  return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n));
}

}  // namespace perp
