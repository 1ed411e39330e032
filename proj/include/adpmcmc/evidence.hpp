#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "adpmcmc/model_zoo.hpp"
#include "adpmcmc/pmcmc_sampler.hpp"
#include "adpmcmc/rng.hpp"

namespace adpmcmc {

struct EvidenceEstimate {
  double log_z = 0.0;
  /// Delta-method standard error of log_z.
  double std_error = 0.0;
  std::size_t n_prior_draws = 0;
  std::size_t particles = 0;
  /// Every likelihood estimate underflowed; log_z is -inf.
  bool underflow = false;
};

/// Prior importance sampling: S prior draws of the free parameters, each
/// weighted by an unbiased filter estimate of p(y | theta) with L particles.
/// Draw s uses the substream rng.split(s). Requires S >= 2.
EvidenceEstimate estimate_log_evidence(ModelId model, std::span<const double> y, std::size_t S,
                                       std::size_t L, const SamplerConfig& cfg, Rng& rng);

struct DefensiveOptions {
  double prior_fraction = 0.1;  ///< mixture weight of the prior component
  double dof = 5.0;             ///< Student-t degrees of freedom
  double inflation = 2.0;       ///< multiplies the posterior covariance
};

/// Defensive importance sampling from a chain: the proposal mixes the prior
/// with a multivariate t fitted to the recorded draws, so the weight
/// p(y | theta) p(theta) / q(theta) is at most p(y | theta) / prior_fraction.
/// Still unbiased for the evidence.
EvidenceEstimate estimate_log_evidence_from_chain(ModelId model, std::span<const double> y,
                                                  const ChainRecord& record, std::size_t S,
                                                  std::size_t L, const SamplerConfig& cfg,
                                                  Rng& rng, const DefensiveOptions& options = {});

/// exp(log_z_i - log_z_j). Throws std::invalid_argument unless both finite.
double bayes_factor(const EvidenceEstimate& zi, const EvidenceEstimate& zj);

/// Matrix of BF_ij; entry (i, j) compares model i against model j.
std::vector<std::vector<double>> bf_table(std::span<const EvidenceEstimate> estimates);
std::vector<std::vector<double>> log_bf_table(std::span<const EvidenceEstimate> estimates);

}  // namespace adpmcmc
