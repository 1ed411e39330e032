#include "adpmcmc/particle_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace adpmcmc {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Normalizes `logw` into `weights` and returns log(sum exp(logw)).
double normalize(std::span<const double> logw, std::span<double> weights) {
  const double max_logw = *std::max_element(logw.begin(), logw.end());
  if (!std::isfinite(max_logw)) {
    std::fill(weights.begin(), weights.end(), 0.0);
    return kNegInf;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < logw.size(); ++i) {
    weights[i] = std::exp(logw[i] - max_logw);
    sum += weights[i];
  }
  const double inv = 1.0 / sum;
  for (double& w : weights) w *= inv;
  return max_logw + std::log(sum);
}

std::uint32_t draw_index(std::span<const double> weights, double u) {
  double cumulative = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    cumulative += weights[i];
    if (u < cumulative) return static_cast<std::uint32_t>(i);
  }
  // Rounding left u above the final partial sum; take the last live particle.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return static_cast<std::uint32_t>(i);
  }
  return 0;
}

}  // namespace

bool FilterOutput::collapsed() const { return log_marginal == kNegInf; }

double ess(std::span<const double> weights) {
  double sum_sq = 0.0;
  for (double w : weights) sum_sq += w * w;
  return 1.0 / sum_sq;
}

std::vector<std::uint32_t> stratified_resample(std::span<const double> weights, std::size_t count,
                                               Rng& rng) {
  std::vector<std::uint32_t> idx(count);
  if (count == 0 || weights.empty()) return idx;
  const double inv_count = 1.0 / static_cast<double>(count);
  const std::size_t last = weights.size() - 1;
  std::size_t i = 0;
  double cumulative = weights[0];
  for (std::size_t k = 0; k < count; ++k) {
    const double u = (static_cast<double>(k) + rng.uniform()) * inv_count;
    while (u >= cumulative && i < last) cumulative += weights[++i];
    idx[k] = static_cast<std::uint32_t>(i);
  }
  // Guard against the rounding tail landing on a zero-weight trailing index.
  for (auto& k : idx) {
    while (weights[k] == 0.0 && k > 0) --k;
  }
  return idx;
}

FilterOutput run_sir(ModelId model, const Params& p, std::span<const double> y,
                     std::size_t particles, Rng& rng, const FilterOptions& options) {
  if (particles == 0) throw std::invalid_argument("run_sir: particle count must be >= 1");
  if (y.empty()) throw std::invalid_argument("run_sir: observation series is empty");
  if (!(options.gamma > 0.0 && options.gamma <= 1.0)) {
    throw std::invalid_argument("run_sir: gamma must lie in (0, 1]");
  }
  if (p.b.size() != coefficient_count(model)) {
    throw std::invalid_argument("run_sir: parameter vector does not match " + to_string(model));
  }

  const std::size_t L = particles;
  const std::size_t T = y.size();
  const double sd_eps = std::sqrt(p.sigma_eps2);
  const double half_inv_w2 = 0.5 / p.sigma_w2;
  // Tempered Gaussian observation log density, constant part hoisted.
  const double obs_const =
      options.gamma * (-0.5 * std::log(2.0 * std::numbers::pi * p.sigma_w2));
  const double threshold = options.resample_threshold * static_cast<double>(L);

  FilterOutput out;
  out.clouds.reserve(T);
  out.resampled.reserve(T);

  // Carried normalized log weights and ancestors for the next mutation.
  std::vector<double> log_carried(L, -std::log(static_cast<double>(L)));
  std::vector<std::uint32_t> ancestors(L, 0);
  std::vector<double> prev_x(1, p.x0);
  bool first = true;

  double log_marginal = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    ParticleCloud cloud;
    cloud.x.resize(L);
    cloud.logw.resize(L);
    cloud.weights.resize(L);
    cloud.parent = ancestors;

    const double yt = y[t];
    for (std::size_t i = 0; i < L; ++i) {
      const std::uint32_t a = first ? 0 : ancestors[i];
      const double mean = transition_mean_unchecked(model, prev_x[a], p);
      const double eps = rng.normal();
      if (!std::isfinite(mean) || !std::isfinite(log_carried[i])) {
        cloud.x[i] = std::isfinite(mean) ? mean + sd_eps * eps : prev_x[a];
        cloud.logw[i] = kNegInf;
        continue;
      }
      const double x = mean + sd_eps * eps;
      cloud.x[i] = x;
      const double r = yt - x;
      cloud.logw[i] = log_carried[i] + obs_const - options.gamma * r * r * half_inv_w2;
    }

    // Carried weights sum to one, so the normalizer is the weighted mean of the
    // incremental weights.
    const double log_increment = normalize(cloud.logw, cloud.weights);
    out.clouds.push_back(std::move(cloud));
    if (!std::isfinite(log_increment)) {
      out.resampled.push_back(false);
      out.log_marginal = kNegInf;
      return out;
    }
    log_marginal += log_increment;

    const ParticleCloud& current = out.clouds.back();
    const bool last_step = t + 1 == T;
    bool resample = false;
    if (!last_step) {
      resample = ess(current.weights) < threshold;
      if (resample) {
        ancestors = stratified_resample(current.weights, L, rng);
        std::fill(log_carried.begin(), log_carried.end(), -std::log(static_cast<double>(L)));
      } else {
        for (std::size_t i = 0; i < L; ++i) {
          ancestors[i] = static_cast<std::uint32_t>(i);
          log_carried[i] = current.logw[i] - log_increment;
        }
      }
      prev_x = current.x;
    }
    out.resampled.push_back(resample);
    first = false;
  }
  out.log_marginal = log_marginal;
  return out;
}

std::vector<double> sample_path(const FilterOutput& out, Rng& rng) {
  if (out.clouds.empty()) throw std::invalid_argument("sample_path: filter output is empty");
  const std::size_t T = out.clouds.size();
  std::vector<double> path(T);
  std::uint32_t k = draw_index(out.clouds.back().weights, rng.uniform());
  for (std::size_t t = T; t-- > 0;) {
    path[t] = out.clouds[t].x[k];
    k = out.clouds[t].parent[k];
  }
  return path;
}

}  // namespace adpmcmc
