#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "adpmcmc/model_zoo.hpp"
#include "adpmcmc/rng.hpp"

namespace adpmcmc {

/// Weighted particles at one time step, before any resampling at that step.
///
/// `logw` is the unnormalized log weight (carried weight times tempered
/// observation density), `weights` its normalization, and `parent` the index
/// into the previous cloud each particle was mutated from. At t = 1 every
/// parent is 0: the previous cloud is the point mass at x0.
struct ParticleCloud {
  std::vector<double> x;
  std::vector<double> logw;
  std::vector<double> weights;
  std::vector<std::uint32_t> parent;

  std::size_t size() const { return x.size(); }
};

struct FilterOutput {
  std::vector<ParticleCloud> clouds;
  /// log of the product over t of the weighted increment means; -inf if every
  /// particle's weight vanished at some step (filtering then stops early).
  double log_marginal = 0.0;
  /// resampled[t] is true when the cloud at t was resampled before mutating
  /// to t + 1.
  std::vector<bool> resampled;

  bool collapsed() const;
};

struct FilterOptions {
  double gamma = 1.0;               ///< tempering exponent on p(y_t | x_t)
  double resample_threshold = 0.8;  ///< resample when ESS < threshold * L
};

/// Bootstrap SIR filter. Particles start at x0, mutate through the process
/// model and are weighted by p(y_t | x_t)^gamma. Throws std::invalid_argument
/// on L = 0, empty y or gamma outside (0, 1].
FilterOutput run_sir(ModelId model, const Params& p, std::span<const double> y,
                     std::size_t particles, Rng& rng, const FilterOptions& options = {});

inline FilterOutput run_sir(ModelId model, const Params& p, std::span<const double> y,
                            std::size_t particles, double gamma, Rng& rng) {
  return run_sir(model, p, y, particles, rng, FilterOptions{gamma, 0.8});
}

/// 1 / sum W_i^2 for normalized weights.
double ess(std::span<const double> weights);

/// `count` ancestor indices drawn with one uniform per stratum
/// u_k = (k + v_k) / count.
std::vector<std::uint32_t> stratified_resample(std::span<const double> weights, std::size_t count,
                                               Rng& rng);

inline std::vector<std::uint32_t> stratified_resample(std::span<const double> weights, Rng& rng) {
  return stratified_resample(weights, weights.size(), rng);
}

/// Draws a terminal particle by its final weight and traces its ancestry.
std::vector<double> sample_path(const FilterOutput& out, Rng& rng);

}  // namespace adpmcmc
