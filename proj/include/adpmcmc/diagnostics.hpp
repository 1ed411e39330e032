#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "adpmcmc/pmcmc_sampler.hpp"

namespace adpmcmc {

/// Geweke Z-score comparing the mean of the first `frac_a` of the series with
/// the mean of the last `frac_b`. Segment-mean variances come from batch means
/// (up to 20 batches per segment). Requires length >= 40.
double geweke_z(std::span<const double> series, double frac_a = 0.1, double frac_b = 0.5);

struct AcfResult {
  std::vector<double> values;  ///< lags 0..max_lag
  bool constant = false;       ///< zero variance; values set to 1 by convention
};

/// Biased-normalization sample autocorrelation. Requires max_lag < length.
AcfResult acf(std::span<const double> series, std::size_t max_lag);

struct BlockedRmse {
  double mean = 0.0;
  double sd = 0.0;
  std::vector<double> per_block;
};

/// Splits the recorded paths into contiguous blocks, takes each block's path
/// mean and returns the spread of its RMSE against `truth`.
BlockedRmse blocked_rmse(const ChainRecord& record, std::span<const double> truth,
                         std::size_t n_blocks = 20);

/// Mean acceptance flag per record.
std::vector<double> acceptance_curve(std::span<const ChainRecord> records);

/// Sample quantile with linear interpolation (type 7). `q` in [0, 1].
double quantile(std::vector<double> values, double q);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool contains(double v) const { return lower <= v && v <= upper; }
};

/// Central credible interval of the given mass.
Interval credible_interval(std::span<const double> draws, double mass = 0.95);

/// Mean and standard error of a correlated series using `n_batches` batch means.
struct BatchMeans {
  double mean = 0.0;
  double std_error = 0.0;
};
BatchMeans batch_means(std::span<const double> series, std::size_t n_batches = 50);

}  // namespace adpmcmc
