#include "adpmcmc/pmcmc_sampler.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "adpmcmc/particle_filter.hpp"

namespace adpmcmc {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Evaluation {
  FilterOutput filter;
  double log_prior = kNegInf;
};

FilterOptions filter_options(const SamplerConfig& cfg, double gamma) {
  return FilterOptions{gamma, cfg.resample_threshold};
}

// Fresh filter run at `state.theta` under the state's gamma, replacing the
// likelihood estimate and path. Only used while the target is still moving.
void refresh(ChainState& state, ModelId model, std::span<const double> y,
             const SamplerConfig& cfg, Rng& rng) {
  FilterOutput out = run_sir(model, state.theta, y, cfg.particles, rng,
                             filter_options(cfg, state.gamma));
  state.log_marginal = out.log_marginal;
  if (!out.collapsed()) state.path = sample_path(out, rng);
}

ChainState initial_state(ModelId model, std::span<const double> y, const SamplerConfig& cfg,
                         const Prior& prior, double gamma, Rng& rng) {
  ChainState state;
  state.gamma = gamma;
  state.stage = cfg.n_anneal > 0 ? Stage::Annealed : Stage::NonAdaptive;
  const std::size_t attempts = cfg.initial ? 1 : std::max<std::size_t>(cfg.max_init_attempts, 1);
  for (std::size_t a = 0; a < attempts; ++a) {
    Params theta = cfg.initial ? *cfg.initial : prior_sample(model, prior, rng);
    theta = apply_fixed(model, theta, cfg);
    const double lp = prior_logpdf(model, theta, prior);
    if (lp == kNegInf) continue;
    FilterOutput out = run_sir(model, theta, y, cfg.particles, rng, filter_options(cfg, gamma));
    if (out.collapsed()) continue;
    state.theta = std::move(theta);
    state.log_prior = lp;
    state.log_marginal = out.log_marginal;
    state.path = sample_path(out, rng);
    return state;
  }
  throw std::domain_error(
      "run_chain: no initial parameter value with a finite likelihood estimate was found");
}

}  // namespace

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::Annealed: return "annealed";
    case Stage::NonAdaptive: return "non-adaptive";
    case Stage::Adaptive: return "adaptive";
  }
  return "?";
}

Prior SamplerConfig::resolved_prior(std::size_t series_length) const {
  return prior ? *prior : default_prior(series_length);
}

std::size_t SamplerConfig::resolved_path_thin(std::size_t series_length) const {
  if (path_thin > 0) return path_thin;
  return series_length <= 512 ? 1 : 10;
}

Eigen::VectorXd ParameterMask::extract(const Eigen::VectorXd& packed) const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(index.size()));
  for (std::size_t i = 0; i < index.size(); ++i) v[static_cast<Eigen::Index>(i)] = packed[index[i]];
  return v;
}

Eigen::VectorXd ParameterMask::insert(const Eigen::VectorXd& packed,
                                      const Eigen::VectorXd& free_values) const {
  Eigen::VectorXd v = packed;
  for (std::size_t i = 0; i < index.size(); ++i) v[index[i]] = free_values[static_cast<Eigen::Index>(i)];
  return v;
}

ParameterMask make_mask(ModelId model, const SamplerConfig& cfg) {
  const auto names = packed_names(model);
  for (const auto& [name, value] : cfg.fixed) {
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw std::invalid_argument("cannot fix '" + name + "': not a parameter of " +
                                  to_string(model));
    }
  }
  ParameterMask mask;
  mask.free.resize(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    mask.free[i] = cfg.fixed.count(names[i]) == 0;
    if (mask.free[i]) mask.index.push_back(static_cast<Eigen::Index>(i));
  }
  return mask;
}

Params apply_fixed(ModelId model, const Params& p, const SamplerConfig& cfg) {
  if (cfg.fixed.empty()) return p;
  const auto names = packed_names(model);
  Eigen::VectorXd packed = pack(model, p);
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (auto it = cfg.fixed.find(names[i]); it != cfg.fixed.end()) {
      packed[static_cast<Eigen::Index>(i)] = it->second;
    }
  }
  return unpack(model, packed);
}

double ChainRecord::acceptance_rate() const {
  if (accepted.empty()) return 0.0;
  const auto hits = std::count(accepted.begin(), accepted.end(), char{1});
  return static_cast<double>(hits) / static_cast<double>(accepted.size());
}

std::vector<double> ChainRecord::trace(std::size_t coordinate) const {
  std::vector<double> out;
  out.reserve(thetas.size());
  for (const auto& t : thetas) out.push_back(t[static_cast<Eigen::Index>(coordinate)]);
  return out;
}

double anneal_schedule(std::size_t n, std::size_t n_anneal, double gamma_min) {
  if (n_anneal == 0 || n < 1 || n > n_anneal) {
    throw std::invalid_argument("anneal_schedule: iteration index out of range");
  }
  if (!(gamma_min > 0.0 && gamma_min <= 1.0)) {
    throw std::invalid_argument("anneal_schedule: gamma_min must lie in (0, 1]");
  }
  if (n_anneal == 1) return 1.0;
  if (n == n_anneal) return 1.0;
  return gamma_min +
         static_cast<double>(n - 1) * (1.0 - gamma_min) / static_cast<double>(n_anneal - 1);
}

StepResult pmmh_step(const ChainState& state, const SamplerConfig& cfg, const AdaptState& adapt,
                     ModelId model, std::span<const double> y, Rng& rng) {
  const Prior prior = cfg.resolved_prior(y.size());
  const ParameterMask mask = make_mask(model, cfg);

  const Eigen::VectorXd current = pack(model, state.theta);
  const Proposal prop = propose(adapt, mask.extract(current), rng);

  StepResult result;
  result.branch = prop.branch;
  result.state = state;

  const Params candidate = unpack(model, mask.insert(current, prop.theta));
  const double log_prior = prior_logpdf(model, candidate, prior);
  if (log_prior == kNegInf) {
    result.prior_rejected = true;
    return result;
  }

  FilterOutput out =
      run_sir(model, candidate, y, cfg.particles, rng, filter_options(cfg, state.gamma));
  if (out.collapsed()) return result;

  const double current_target = state.log_marginal + state.log_prior;
  const double log_ratio = (out.log_marginal + log_prior) - current_target;
  const double u = rng.uniform();
  const bool accept = current_target == kNegInf || std::log(u) < log_ratio;
  if (!accept) return result;

  result.accepted = true;
  result.state.theta = candidate;
  result.state.log_prior = log_prior;
  result.state.log_marginal = out.log_marginal;
  result.state.path = sample_path(out, rng);
  if (cfg.record_bcrlb && state.stage == Stage::Adaptive) {
    result.state.d_terms = d_terms_from_filter(model, out, candidate);
  }
  return result;
}

ChainRecord run_chain(ModelId model, std::span<const double> y, const SamplerConfig& cfg) {
  if (y.empty()) throw std::invalid_argument("run_chain: observation series is empty");
  if (cfg.particles == 0) throw std::invalid_argument("run_chain: particle count must be >= 1");
  const std::size_t T = y.size();
  const Prior prior = cfg.resolved_prior(T);
  const ParameterMask mask = make_mask(model, cfg);
  if (mask.free_count() == 0) throw std::invalid_argument("run_chain: every parameter is fixed");

  Rng rng(cfg.seed);
  AdaptState adapt = make_adapt_state(mask.free_count(), cfg.w1, cfg.anneal_scale_multiplier);
  if (cfg.fixed_covariance) {
    const Eigen::MatrixXd& c = *cfg.fixed_covariance;
    const auto full = static_cast<Eigen::Index>(parameter_dimension(model) + 1);
    if (c.rows() != full || c.cols() != full) {
      throw std::invalid_argument("run_chain: fixed_covariance must match the packed dimension");
    }
    const auto d = static_cast<Eigen::Index>(mask.free_count());
    Eigen::MatrixXd block(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) block(i, j) = c(mask.index[i], mask.index[j]);
    }
    adapt.fixed_factor = symmetric_sqrt(block);
  }

  const double gamma0 = cfg.n_anneal > 0 ? anneal_schedule(1, cfg.n_anneal, cfg.gamma_min) : 1.0;
  ChainState state = initial_state(model, y, cfg, prior, gamma0, rng);

  ChainRecord record;
  record.model = model;
  record.names = packed_names(model);

  // Stage 1: tempered target with a moving exponent. The current estimate is
  // refreshed whenever gamma changes so both sides of the ratio share it.
  std::size_t hits = 0;
  for (std::size_t n = 1; n <= cfg.n_anneal; ++n) {
    const double gamma = anneal_schedule(n, cfg.n_anneal, cfg.gamma_min);
    if (gamma != state.gamma) {
      state.gamma = gamma;
      refresh(state, model, y, cfg, rng);
    }
    StepResult step = pmmh_step(state, cfg, adapt, model, y, rng);
    hits += step.accepted;
    state = std::move(step.state);
  }
  if (cfg.n_anneal > 0) record.stage_acceptance[0] = double(hits) / double(cfg.n_anneal);

  // Stage 2: untempered, fixed component; draws seed the covariance.
  state.stage = Stage::NonAdaptive;
  if (state.gamma != 1.0) {
    state.gamma = 1.0;
    refresh(state, model, y, cfg, rng);
  }
  adapt.fixed_scale_multiplier = cfg.fixed_scale_multiplier;
  hits = 0;
  for (std::size_t n = 0; n < cfg.n_burn; ++n) {
    StepResult step = pmmh_step(state, cfg, adapt, model, y, rng);
    hits += step.accepted;
    state = std::move(step.state);
    absorb(adapt, mask.extract(pack(model, state.theta)));
  }
  if (cfg.n_burn > 0) record.stage_acceptance[1] = double(hits) / double(cfg.n_burn);

  // Stage 3: adaptive mixture, recorded.
  state.stage = Stage::Adaptive;
  adapt.adaptation_enabled = true;
  if (cfg.record_bcrlb && cfg.n_sample > 0) {
    FilterOutput out = run_sir(model, state.theta, y, cfg.particles, rng, filter_options(cfg, 1.0));
    if (!out.collapsed()) state.d_terms = d_terms_from_filter(model, out, state.theta);
  }

  const std::size_t thin = cfg.resolved_path_thin(T);
  record.thetas.reserve(cfg.n_sample);
  record.accepted.reserve(cfg.n_sample);
  record.log_marginals.reserve(cfg.n_sample);
  record.paths.reserve(cfg.n_sample / thin + 1);
  if (cfg.record_bcrlb) record.d_terms.reserve(cfg.n_sample);
  hits = 0;
  for (std::size_t n = 0; n < cfg.n_sample; ++n) {
    StepResult step = pmmh_step(state, cfg, adapt, model, y, rng);
    hits += step.accepted;
    record.proposal_fallbacks += step.branch == ProposalBranch::FixedFallback;
    state = std::move(step.state);
    const Eigen::VectorXd packed = pack(model, state.theta);
    absorb(adapt, mask.extract(packed));

    record.thetas.push_back(packed);
    record.accepted.push_back(step.accepted ? 1 : 0);
    record.log_marginals.push_back(state.log_marginal);
    if (n % thin == 0) {
      record.paths.push_back(state.path);
      record.path_draw.push_back(n);
    }
    if (cfg.record_bcrlb) record.d_terms.push_back(state.d_terms);
  }
  if (cfg.n_sample > 0) record.stage_acceptance[2] = double(hits) / double(cfg.n_sample);
  return record;
}

MmseEstimate mmse(const ChainRecord& record) {
  if (record.thetas.empty()) throw std::invalid_argument("mmse: chain record has no draws");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(record.thetas.front().size());
  for (const auto& t : record.thetas) mean += t;
  mean /= static_cast<double>(record.thetas.size());

  MmseEstimate est;
  est.theta = unpack(record.model, mean);
  if (!record.paths.empty()) {
    est.path.assign(record.paths.front().size(), 0.0);
    for (const auto& path : record.paths) {
      for (std::size_t t = 0; t < path.size(); ++t) est.path[t] += path[t];
    }
    for (double& v : est.path) v /= static_cast<double>(record.paths.size());
  }
  return est;
}

namespace {

struct LsFit {
  std::vector<double> b;
  Eigen::MatrixXd xtx_inv;
  double rss = std::numeric_limits<double>::infinity();
  double score = -std::numeric_limits<double>::infinity();  // profile log posterior
};

LsFit least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& r) {
  const auto qr = X.colPivHouseholderQr();
  if (qr.rank() < X.cols()) return {};
  const Eigen::VectorXd b = qr.solve(r);
  const double rss = (X * b - r).squaredNorm();
  if (!std::isfinite(rss)) return {};
  LsFit fit;
  fit.b.assign(b.data(), b.data() + b.size());
  fit.xtx_inv = (X.transpose() * X).inverse();
  fit.rss = rss;
  return fit;
}

}  // namespace

PilotEstimate least_squares_pilot(ModelId model, std::span<const double> y) {
  const std::size_t k = coefficient_count(model);
  if (y.size() < k + 2) throw std::invalid_argument("least_squares_pilot: series too short");
  const auto n = static_cast<Eigen::Index>(y.size() - 1);
  Eigen::VectorXd prev(n), next(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    prev[i] = y[static_cast<std::size_t>(i)];
    next[i] = y[static_cast<std::size_t>(i) + 1];
  }
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd ex = prev.array().exp();

  // Each candidate is scored by its profile log likelihood (variance
  // profiled out) plus the prior of the profiled coefficient, which keeps
  // the grid search off the far end of a ridge.
  const Prior prior = default_prior(std::max<std::size_t>(y.size(), 3));
  std::vector<double> grid_scores;
  std::size_t best_at = 0;
  LsFit best;
  auto consider = [&](LsFit fit, std::vector<double> extra) {
    fit.score = -std::numeric_limits<double>::infinity();
    if (std::isfinite(fit.rss)) {
      fit.score = -0.5 * static_cast<double>(n) * std::log(std::max(fit.rss, 1e-300));
      if (!extra.empty()) fit.score += prior_coordinate_logpdf(model, k - 1, extra[0], prior);
    }
    grid_scores.push_back(fit.score);
    if (fit.score > best.score) {
      fit.b.insert(fit.b.end(), extra.begin(), extra.end());
      best = std::move(fit);
      best_at = grid_scores.size() - 1;
    }
  };
  double grid_step = 0.0;  // spacing of the profiled coordinate (log scale for b4)
  switch (model) {
    case ModelId::M0:
      consider(least_squares(ones, next - prev), {});
      break;
    case ModelId::M1: {
      Eigen::MatrixXd X(n, 2);
      X << ones, ex;
      consider(least_squares(X, next - prev), {});
      break;
    }
    case ModelId::M2:
      grid_step = 0.01;
      for (int g = -300; g <= 300; ++g) {
        // b3 = 0 would duplicate the intercept; score it as unusable.
        const double b3 = g == 0 ? 1e-9 : grid_step * g;
        Eigen::MatrixXd X(n, 2);
        X << ones, (b3 * prev).array().exp().matrix();
        consider(g == 0 ? LsFit{} : least_squares(X, next - prev), {b3});
      }
      break;
    case ModelId::M3:
      grid_step = 0.02;
      for (int g = -250; g <= 350; ++g) {
        const double b4 = std::exp(grid_step * g);
        Eigen::MatrixXd X(n, 2);
        X << ones, ex;
        const Eigen::VectorXd r = next - 2.0 * prev + (b4 + ex.array()).log().matrix();
        consider(least_squares(X, r), {b4});
      }
      break;
    case ModelId::M4: {
      Eigen::MatrixXd X(n, 3);
      X << ones, ex, ex.array().square().matrix();
      consider(least_squares(X, next - prev), {});
      break;
    }
  }
  if (best.b.size() != k) throw std::domain_error("least_squares_pilot: no usable fit");

  PilotEstimate out;
  Params& p = out.theta;
  p.b = best.b;
  const double dof = std::max<double>(1.0, static_cast<double>(n) - static_cast<double>(k));
  const double s2 = std::max(best.rss / dof, 1e-8);
  p.sigma_eps2 = p.sigma_w2 = 0.5 * s2;
  const double step = transition_mean_unchecked(model, y[0], p) - y[0];
  p.x0 = std::isfinite(step) ? y[0] - step : y[0];

  const auto full = static_cast<Eigen::Index>(k + 3);
  Eigen::MatrixXd& cov = out.covariance;
  cov = Eigen::MatrixXd::Zero(full, full);
  const auto nreg = best.xtx_inv.rows();
  cov.topLeftCorner(nreg, nreg) = s2 * best.xtx_inv;
  if (grid_step > 0.0) {
    // Curvature of the profile score; fall back to a tenth of the value.
    double var = std::pow(0.1 * std::max(std::abs(p.b[k - 1]), 0.1), 2);
    if (best_at > 0 && best_at + 1 < grid_scores.size()) {
      const double c = (grid_scores[best_at - 1] - 2.0 * grid_scores[best_at] +
                        grid_scores[best_at + 1]) / (grid_step * grid_step);
      if (std::isfinite(c) && c < 0.0) {
        var = -1.0 / c;
        if (model == ModelId::M3) var *= p.b[k - 1] * p.b[k - 1];  // grid is in log b4
      }
    }
    cov(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(k - 1)) = var;
  }
  const auto ik = static_cast<Eigen::Index>(k);
  const double var_sigma = 2.0 * p.sigma_eps2 * p.sigma_eps2 / static_cast<double>(n);
  cov(ik, ik) = cov(ik + 1, ik + 1) = var_sigma;
  cov(ik + 2, ik + 2) = s2;
  return out;
}

void apply_pilot(ModelId model, std::span<const double> y, SamplerConfig& cfg) {
  PilotEstimate pilot = least_squares_pilot(model, y);
  cfg.initial = pilot.theta;
  cfg.fixed_covariance = std::move(pilot.covariance);
}

}  // namespace adpmcmc
