#pragma once

// Two-component Gaussian mixture random walk for the static parameters:
//
//   q(theta, .) = w1 N(theta, (2.38^2 / d) Sigma) + (1 - w1) N(theta, (0.1^2 / d) m I)
//
// where Sigma is the running empirical covariance of the chain and m an
// optional multiplier on the fixed component. The fixed component's identity
// can be replaced by a preconditioning matrix C (fixed_factor = C^{1/2}).

#include <Eigen/Core>

#include <cstddef>

#include "adpmcmc/rng.hpp"

namespace adpmcmc {

struct AdaptState {
  std::size_t dim = 0;
  std::size_t n = 0;         ///< samples absorbed into mean/scatter
  Eigen::VectorXd mean;      ///< running mean
  Eigen::MatrixXd scatter;   ///< sum of outer products of deviations
  double w1 = 0.95;          ///< probability of the adaptive component
  double scale_adaptive = 0.0;
  double scale_fixed = 0.0;
  double fixed_scale_multiplier = 1.0;
  /// Square root of the fixed component's preconditioner; empty means I.
  Eigen::MatrixXd fixed_factor;
  /// When false only the fixed component is used (annealing and burn-in).
  bool adaptation_enabled = false;

  /// Empirical covariance with denominator n - 1 (zero matrix for n < 2).
  Eigen::MatrixXd covariance() const;
  /// Adaptation needs at least 2d + 1 samples.
  std::size_t min_samples() const { return 2 * dim + 1; }
  bool adaptive_selectable() const { return adaptation_enabled && n >= min_samples(); }
};

/// Defaults: w1 = 0.95, scale_adaptive = 2.38^2 / d, scale_fixed = 0.1^2 / d.
AdaptState make_adapt_state(std::size_t dim, double w1 = 0.95,
                            double fixed_scale_multiplier = 1.0);

/// Symmetric square root of a positive definite matrix; throws
/// std::invalid_argument otherwise.
Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m);

/// Rank-one update of mean and scatter (Welford).
void absorb(AdaptState& s, const Eigen::Ref<const Eigen::VectorXd>& theta);
AdaptState update_covariance(AdaptState s, const Eigen::Ref<const Eigen::VectorXd>& theta);

enum class ProposalBranch { Adaptive, Fixed, FixedFallback };

struct Proposal {
  Eigen::VectorXd theta;
  ProposalBranch branch = ProposalBranch::Fixed;
};

/// Symmetric square root of scale_adaptive * Sigma; returns false if Sigma is
/// not positive definite even after jitter of 1e-10 * trace / d.
bool adaptive_factor(const AdaptState& s, Eigen::MatrixXd& factor);

/// Draws u ~ U[0,1) and z ~ N(0, I); the adaptive branch is taken when
/// u < w1 and adaptation is selectable. A singular Sigma falls back to the
/// fixed component for this draw.
Proposal propose(const AdaptState& s, const Eigen::Ref<const Eigen::VectorXd>& theta, Rng& rng);

/// Deterministic core of propose() for a given branch and standard normal z.
Proposal propose_with(const AdaptState& s, const Eigen::Ref<const Eigen::VectorXd>& theta,
                      bool adaptive_branch, const Eigen::Ref<const Eigen::VectorXd>& z);

/// log q(from -> to) of the full mixture as currently configured.
double proposal_logpdf(const AdaptState& s, const Eigen::Ref<const Eigen::VectorXd>& from,
                       const Eigen::Ref<const Eigen::VectorXd>& to);

}  // namespace adpmcmc
