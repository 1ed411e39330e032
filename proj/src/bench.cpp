#include "adpmcmc/bench.hpp"

#include <cmath>
#include <stdexcept>

#include "adpmcmc/diagnostics.hpp"
#include "adpmcmc/io.hpp"

namespace adpmcmc {
namespace {

std::pair<double, double> mean_sd(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return {m, sd};
}

}  // namespace

Params theta_logistic_reference() {
  return Params{{0.15, -0.125, 0.1}, 0.47 * 0.47, 0.39 * 0.39, std::log(1.27)};
}

Params flexible_allee_reference(double sigma_eps2, double sigma_w2) {
  return Params{{-0.05, 0.0525, -0.0025}, sigma_eps2, sigma_w2, std::log(2.0)};
}

RmseStudyResult rmse_bcrlb_study(const RmseStudyConfig& cfg) {
  if (cfg.n_datasets == 0) throw std::invalid_argument("rmse study: need at least one dataset");
  RmseStudyResult out;
  std::vector<double> rmse, bound;
  for (std::size_t d = 0; d < cfg.n_datasets; ++d) {
    Rng data_rng = Rng(cfg.data_seed).split(d);
    const SyntheticTruth truth = simulate_dataset(cfg.model, cfg.truth, cfg.T, data_rng);
    SamplerConfig sc = cfg.sampler;
    sc.seed = cfg.sampler.seed + d;
    sc.record_bcrlb = true;
    const ChainRecord rec = run_chain(cfg.model, truth.y, sc);
    const BlockedRmse br = blocked_rmse(rec, truth.x_true, cfg.n_blocks);
    const BcrlbResult bc = bcrlb_marginal(cfg.model, truth.y, rec, sc);
    out.rows.push_back(RmseStudyRow{br.mean, br.sd, bc.avg_root_bound, rec.acceptance_rate()});
    rmse.push_back(br.mean);
    bound.push_back(bc.avg_root_bound);
  }
  std::tie(out.rmse_mean, out.rmse_sd) = mean_sd(rmse);
  std::tie(out.bcrlb_mean, out.bcrlb_sd) = mean_sd(bound);
  return out;
}

AcceptanceSweepResult acceptance_sweep(const AcceptanceSweepConfig& cfg) {
  if (cfg.particles.empty() || cfg.n_seeds == 0) {
    throw std::invalid_argument("acceptance sweep: need particle counts and seeds");
  }
  AcceptanceSweepResult out;
  out.particles = cfg.particles;
  out.per_seed.assign(cfg.particles.size(), std::vector<double>(cfg.n_seeds, 0.0));
  for (std::size_t s = 0; s < cfg.n_seeds; ++s) {
    Rng data_rng = Rng(cfg.data_seed).split(s);
    const SyntheticTruth truth = simulate_dataset(cfg.model, cfg.truth, cfg.T, data_rng);
    for (std::size_t k = 0; k < cfg.particles.size(); ++k) {
      SamplerConfig sc = cfg.sampler;
      sc.particles = cfg.particles[k];
      sc.seed = cfg.sampler.seed + s;
      sc.record_bcrlb = false;
      out.per_seed[k][s] = run_chain(cfg.model, truth.y, sc).stage_acceptance[2];
    }
  }
  for (const auto& row : out.per_seed) out.mean_acceptance.push_back(mean_sd(row).first);
  return out;
}

BayesFactorStudyResult bayes_factor_study(const BayesFactorStudyConfig& cfg) {
  if (cfg.n_datasets == 0) throw std::invalid_argument("bf study: need at least one dataset");
  if (!(cfg.eps_divisor > 0.0) || !(cfg.w_divisor > 0.0)) {
    throw std::invalid_argument("bf study: noise divisors must be positive");
  }
  if (!(cfg.prior_noise_divisor > 0.0)) {
    throw std::invalid_argument("bf study: prior_noise_divisor must be positive");
  }
  const Prior prior = cfg.sampler.resolved_prior(cfg.T);
  Prior fit_prior = prior;
  fit_prior.ig_beta /= cfg.prior_noise_divisor;
  BayesFactorStudyResult out;
  for (std::size_t d = 0; d < cfg.n_datasets; ++d) {
    Rng data_rng = Rng(cfg.data_seed).split(d);
    const double s_eps = prior.ig_beta / data_rng.gamma(prior.ig_alpha, 1.0) / cfg.eps_divisor;
    const double s_w = prior.ig_beta / data_rng.gamma(prior.ig_alpha, 1.0) / cfg.w_divisor;
    BayesFactorDataset ds;
    ds.truth = flexible_allee_reference(s_eps, s_w);
    const SyntheticTruth truth = simulate_dataset(ModelId::M4, ds.truth, cfg.T, data_rng);
    for (ModelId m : kAllModels) {
      SamplerConfig sc = cfg.sampler;
      sc.seed = cfg.sampler.seed + 97 * d + static_cast<std::size_t>(m);
      sc.record_bcrlb = false;
      sc.prior = fit_prior;
      if (cfg.pilot_start) {
        apply_pilot(m, truth.y, sc);
        sc.fixed_scale_multiplier *= cfg.pilot_proposal_scale;
        sc.anneal_scale_multiplier *= cfg.pilot_proposal_scale;
      }
      const ChainRecord rec = run_chain(m, truth.y, sc);
      Rng ev_rng = Rng(sc.seed).split(0xe71d);
      ds.evidence.push_back(estimate_log_evidence_from_chain(
          m, truth.y, rec, cfg.evidence_draws, cfg.evidence_particles, sc, ev_rng, cfg.defensive));
    }
    ds.log_bf = log_bf_table(ds.evidence);
    out.datasets.push_back(std::move(ds));
  }
  return out;
}

}  // namespace adpmcmc
