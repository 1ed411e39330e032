#include "adpmcmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace adpmcmc {
namespace {

double mean_of(std::span<const double> s) {
  return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

// Variance of the segment mean from non-overlapping batch means. The tail
// that does not fill a whole batch is folded into the last batch.
double segment_mean_variance(std::span<const double> seg, std::size_t max_batches) {
  const std::size_t nb = std::min(max_batches, seg.size());
  const std::size_t width = seg.size() / nb;
  std::vector<double> means(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t begin = b * width;
    const std::size_t end = b + 1 == nb ? seg.size() : begin + width;
    means[b] = mean_of(seg.subspan(begin, end - begin));
  }
  const double m = mean_of(means);
  double ss = 0.0;
  for (double v : means) ss += (v - m) * (v - m);
  return ss / static_cast<double>(nb - 1) / static_cast<double>(nb);
}

}  // namespace

double geweke_z(std::span<const double> series, double frac_a, double frac_b) {
  if (series.size() < 40) throw std::invalid_argument("geweke_z: need at least 40 values");
  if (!(frac_a > 0.0) || !(frac_b > 0.0) || frac_a + frac_b > 1.0) {
    throw std::invalid_argument("geweke_z: segment fractions must be positive and sum to <= 1");
  }
  const auto n = static_cast<double>(series.size());
  const auto na = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(frac_a * n)));
  const auto nb = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(frac_b * n)));
  const auto a = series.first(na);
  const auto b = series.last(nb);
  const double diff = mean_of(a) - mean_of(b);
  const double v = segment_mean_variance(a, 20) + segment_mean_variance(b, 20);
  if (!(v > 0.0)) {
    if (diff == 0.0) return 0.0;
    return std::copysign(std::numeric_limits<double>::infinity(), diff);
  }
  return diff / std::sqrt(v);
}

AcfResult acf(std::span<const double> series, std::size_t max_lag) {
  if (max_lag >= series.size()) throw std::invalid_argument("acf: max_lag must be < length");
  AcfResult out;
  out.values.assign(max_lag + 1, 1.0);
  const double m = mean_of(series);
  double c0 = 0.0;
  for (double v : series) c0 += (v - m) * (v - m);
  if (!(c0 > 0.0)) {
    out.constant = true;
    return out;
  }
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double ck = 0.0;
    for (std::size_t t = k; t < series.size(); ++t) ck += (series[t] - m) * (series[t - k] - m);
    out.values[k] = std::clamp(ck / c0, -1.0, 1.0);
  }
  return out;
}

BlockedRmse blocked_rmse(const ChainRecord& record, std::span<const double> truth,
                         std::size_t n_blocks) {
  if (n_blocks == 0) throw std::invalid_argument("blocked_rmse: n_blocks must be >= 1");
  if (record.paths.size() < n_blocks) {
    throw std::invalid_argument("blocked_rmse: fewer recorded paths than blocks");
  }
  const std::size_t T = truth.size();
  for (const auto& p : record.paths) {
    if (p.size() != T) throw std::invalid_argument("blocked_rmse: truth length does not match paths");
  }
  BlockedRmse out;
  out.per_block.reserve(n_blocks);
  const std::size_t n = record.paths.size();
  for (std::size_t b = 0; b < n_blocks; ++b) {
    const std::size_t begin = b * n / n_blocks;
    const std::size_t end = (b + 1) * n / n_blocks;
    std::vector<double> est(T, 0.0);
    for (std::size_t j = begin; j < end; ++j) {
      for (std::size_t t = 0; t < T; ++t) est[t] += record.paths[j][t];
    }
    double se = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const double e = est[t] / static_cast<double>(end - begin) - truth[t];
      se += e * e;
    }
    out.per_block.push_back(std::sqrt(se / static_cast<double>(T)));
  }
  out.mean = mean_of(out.per_block);
  if (n_blocks > 1) {
    double ss = 0.0;
    for (double v : out.per_block) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(n_blocks - 1));
  }
  return out;
}

std::vector<double> acceptance_curve(std::span<const ChainRecord> records) {
  if (records.empty()) throw std::invalid_argument("acceptance_curve: no records");
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.acceptance_rate());
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Interval credible_interval(std::span<const double> draws, double mass) {
  if (!(mass > 0.0 && mass < 1.0)) throw std::invalid_argument("credible_interval: mass in (0, 1)");
  std::vector<double> v(draws.begin(), draws.end());
  const double tail = 0.5 * (1.0 - mass);
  return Interval{quantile(v, tail), quantile(v, 1.0 - tail)};
}

BatchMeans batch_means(std::span<const double> series, std::size_t n_batches) {
  if (n_batches < 2 || series.size() < n_batches) {
    throw std::invalid_argument("batch_means: need at least 2 batches and one value per batch");
  }
  BatchMeans out;
  out.mean = mean_of(series);
  out.std_error = std::sqrt(segment_mean_variance(series, n_batches));
  return out;
}

}  // namespace adpmcmc
