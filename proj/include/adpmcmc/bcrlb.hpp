#pragma once

// Recursive Bayesian Cramer-Rao lower bound for the latent log-abundance.
//
// For a scalar state with additive Gaussian noise the posterior Fisher
// information obeys
//
//   J_t = D22 - D12^2 / (J_{t-1} + D11),     J_0 = 1 / sigma_eps2,
//
//   D11 = E[f'(x_{t-1})^2] / sigma_eps2
//   D12 = -E[f'(x_{t-1})] / sigma_eps2
//   D22 = 1 / sigma_eps2 + 1 / sigma_w2
//
// with expectations over the filtering distribution at t - 1, approximated by
// the weighted particle cloud of the same filter run that drives the sampler.

#include <cstddef>
#include <span>
#include <vector>

#include "adpmcmc/model_zoo.hpp"
#include "adpmcmc/particle_filter.hpp"
#include "adpmcmc/rng.hpp"

namespace adpmcmc {

struct ChainRecord;
struct SamplerConfig;

struct DTerms {
  double d11 = 0.0;
  double d12 = 0.0;
  double d22 = 0.0;
};

struct FimTrace {
  std::vector<double> information;  ///< J_1..J_T
  std::vector<double> bound;        ///< 1 / J_t
  std::vector<DTerms> d_terms;
};

/// One step of the information recursion. Throws std::domain_error when
/// J_prev + d11 <= 0.
double fim_step(double j_prev, double d11, double d12, double d22);
inline double fim_step(double j_prev, const DTerms& d) { return fim_step(j_prev, d.d11, d.d12, d.d22); }

/// D-terms from a weighted cloud (weights must be normalized).
DTerms estimate_d_terms(ModelId model, const ParticleCloud& cloud, const Params& p);
/// D-terms for a point mass at x.
DTerms estimate_d_terms_at(ModelId model, double x, const Params& p);

/// D-terms for every t = 1..T of a filter run: t = 1 uses the point mass at
/// x0, later steps the filtering cloud at t - 1.
std::vector<DTerms> d_terms_from_filter(ModelId model, const FilterOutput& out, const Params& p);

/// Runs the recursion from J_0 = 1 / sigma_eps2.
FimTrace fim_trace(double sigma_eps2, std::span<const DTerms> d_terms);

enum class BoundAggregation {
  /// sqrt of the mean of 1/J_t over draws and time.
  VarianceThenRoot,
  /// mean over draws of sqrt(mean_t 1/J_t).
  RootThenAverage,
};

struct BcrlbResult {
  double avg_root_bound = 0.0;
  std::vector<double> per_t_bounds;  ///< 1/J_t averaged over draws
  std::size_t draws_used = 0;
};

/// Averages the bound over retained chain draws. Uses the d-terms stored in
/// the record when present; otherwise reruns the filter at every `stride`-th
/// stored parameter draw with cfg.particles particles.
BcrlbResult bcrlb_marginal(ModelId model, std::span<const double> y, const ChainRecord& record,
                           const SamplerConfig& cfg,
                           BoundAggregation aggregation = BoundAggregation::VarianceThenRoot,
                           std::size_t stride = 1);

/// Aggregates per-draw FIM traces.
BcrlbResult aggregate_bounds(std::span<const FimTrace> traces, BoundAggregation aggregation);

struct KalmanResult {
  double log_likelihood = 0.0;
  /// Information recursion from J_0 = 1 / sigma_eps2.
  std::vector<double> exact_information;
  /// Kalman filter with x0 known exactly, matching the sampler's model.
  std::vector<double> filtered_mean;
  std::vector<double> filtered_var;
};

/// Exact filter for the linear Gaussian M0. Throws std::invalid_argument for
/// any other model.
KalmanResult kalman_information_filter_m0(ModelId model, const Params& p,
                                          std::span<const double> y);

}  // namespace adpmcmc
