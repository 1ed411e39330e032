#pragma once

// Particle marginal Metropolis-Hastings over (theta, x_{1:T}) with an
// adaptive mixture proposal for theta and a bootstrap filter for the path.
//
// Three stages:
//   1. annealed: tempered target prior * likelihood^gamma, gamma rising
//      linearly from gamma_min to 1; fixed proposal component only.
//   2. non-adaptive burn-in at gamma = 1; draws feed the empirical covariance.
//   3. adaptive: full mixture proposal, covariance updated every iteration.
// Only stage-3 draws are recorded.

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adpmcmc/adaptive_proposal.hpp"
#include "adpmcmc/bcrlb.hpp"
#include "adpmcmc/model_zoo.hpp"
#include "adpmcmc/rng.hpp"

namespace adpmcmc {

enum class Stage { Annealed, NonAdaptive, Adaptive };

std::string to_string(Stage stage);

struct SamplerConfig {
  std::size_t particles = 500;
  std::size_t n_anneal = 5000;
  std::size_t n_burn = 5000;
  std::size_t n_sample = 50000;
  std::uint64_t seed = 1;
  double resample_threshold = 0.8;
  double gamma_min = 1e-5;
  double w1 = 0.95;
  /// Multiplies the fixed component's variance in stages 2 and 3.
  double fixed_scale_multiplier = 1.0;
  /// Multiplies the fixed component's variance during annealing.
  double anneal_scale_multiplier = 1.0;
  /// Keep every k-th stage-3 path; 0 picks 1 for T <= 512 and 10 otherwise.
  std::size_t path_thin = 0;
  /// Store per-draw D-terms for the Cramer-Rao bound.
  bool record_bcrlb = true;
  /// Prior hyperparameters; defaults to default_prior(T).
  std::optional<Prior> prior;
  /// Parameters held at a fixed value, keyed by packed name ("b0", "x0", ...).
  std::map<std::string, double> fixed;
  /// Starting point; drawn from the prior when absent.
  std::optional<Params> initial;
  /// Preconditioner for the fixed proposal component over the packed
  /// coordinates (the free block is used); identity when absent.
  std::optional<Eigen::MatrixXd> fixed_covariance;
  /// Prior redraws allowed while looking for a finite initial likelihood.
  std::size_t max_init_attempts = 1000;

  Prior resolved_prior(std::size_t series_length) const;
  std::size_t resolved_path_thin(std::size_t series_length) const;
};

/// Free/fixed split of the packed parameter vector.
struct ParameterMask {
  std::vector<bool> free;           ///< one flag per packed coordinate
  std::vector<Eigen::Index> index;  ///< packed index of each free coordinate

  std::size_t free_count() const { return index.size(); }
  Eigen::VectorXd extract(const Eigen::VectorXd& packed) const;
  Eigen::VectorXd insert(const Eigen::VectorXd& packed, const Eigen::VectorXd& free_values) const;
};

ParameterMask make_mask(ModelId model, const SamplerConfig& cfg);
/// Overrides the fixed coordinates of `p` with the configured values.
Params apply_fixed(ModelId model, const Params& p, const SamplerConfig& cfg);

struct ChainState {
  Params theta;
  std::vector<double> path;
  /// Filter estimate of log p(y | theta)^gamma obtained when theta was accepted.
  double log_marginal = 0.0;
  double log_prior = 0.0;
  Stage stage = Stage::Annealed;
  double gamma = 1.0;
  std::vector<DTerms> d_terms;
};

struct StepResult {
  ChainState state;
  bool accepted = false;
  bool prior_rejected = false;
  ProposalBranch branch = ProposalBranch::Fixed;
};

struct ChainRecord {
  ModelId model = ModelId::M0;
  std::vector<std::string> names;         ///< packed parameter names
  std::vector<Eigen::VectorXd> thetas;    ///< packed parameters, one per draw
  std::vector<char> accepted;             ///< acceptance flag of the step producing each draw
  std::vector<double> log_marginals;
  std::vector<std::vector<double>> paths;  ///< stored paths (possibly thinned)
  std::vector<std::size_t> path_draw;      ///< draw index of each stored path
  std::vector<std::vector<DTerms>> d_terms;  ///< per draw when recorded
  std::array<double, 3> stage_acceptance{0.0, 0.0, 0.0};
  std::size_t proposal_fallbacks = 0;

  std::size_t size() const { return thetas.size(); }
  double acceptance_rate() const;
  /// Values of one packed coordinate across draws.
  std::vector<double> trace(std::size_t coordinate) const;
};

/// gamma_min + (n - 1)(1 - gamma_min)/(n_anneal - 1) for 1 <= n <= n_anneal.
double anneal_schedule(std::size_t n, std::size_t n_anneal, double gamma_min);

/// One PMMH iteration at the tempering exponent state.gamma.
StepResult pmmh_step(const ChainState& state, const SamplerConfig& cfg, const AdaptState& adapt,
                     ModelId model, std::span<const double> y, Rng& rng);

/// Runs the three-stage schedule. Deterministic in cfg.seed.
ChainRecord run_chain(ModelId model, std::span<const double> y, const SamplerConfig& cfg);

struct MmseEstimate {
  Params theta;
  std::vector<double> path;
};

struct PilotEstimate {
  Params theta;
  /// Rough covariance over the packed coordinates: least-squares covariance
  /// for the regression coefficients, profile curvature for b3 or b4 and
  /// diagonal guesses for the variances and x0.
  Eigen::MatrixXd covariance;
};

/// Starting point for data with little noise: y_t - y_{t-1} regressed on the
/// growth terms at y_{t-1}, with b3 (M2) and b4 (M3) chosen on a grid by
/// profile likelihood plus their default prior.
/// Both variances get half the residual variance; x0 inverts one step from
/// y_1. Requires at least coefficient_count + 2 observations.
PilotEstimate least_squares_pilot(ModelId model, std::span<const double> y);

/// Sets cfg.initial and cfg.fixed_covariance from least_squares_pilot().
void apply_pilot(ModelId model, std::span<const double> y, SamplerConfig& cfg);

/// Coordinate-wise posterior means. Throws std::invalid_argument when empty.
MmseEstimate mmse(const ChainRecord& record);

}  // namespace adpmcmc
