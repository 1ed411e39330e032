#include "adpmcmc/evidence.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "adpmcmc/particle_filter.hpp"

namespace adpmcmc {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log mean exp with the delta-method standard error of its log.
EvidenceEstimate summarize(const std::vector<double>& log_w, std::size_t L) {
  EvidenceEstimate est;
  est.n_prior_draws = log_w.size();
  est.particles = L;
  const double m = *std::max_element(log_w.begin(), log_w.end());
  if (m == kNegInf) {
    est.log_z = kNegInf;
    est.std_error = std::numeric_limits<double>::infinity();
    est.underflow = true;
    return est;
  }
  const double n = static_cast<double>(log_w.size());
  double s1 = 0.0;
  double s2 = 0.0;
  for (double l : log_w) {
    const double r = std::exp(l - m);
    s1 += r;
    s2 += r * r;
  }
  const double mean = s1 / n;
  const double var = std::max(0.0, (s2 / n - mean * mean) * n / (n - 1.0));
  est.log_z = m + std::log(mean);
  est.std_error = std::sqrt(var / n) / mean;
  return est;
}

double free_prior_logpdf(ModelId model, const ParameterMask& mask, const Eigen::VectorXd& packed,
                         const Prior& prior) {
  double lp = 0.0;
  for (Eigen::Index i : mask.index) {
    lp += prior_coordinate_logpdf(model, static_cast<std::size_t>(i), packed[i], prior);
  }
  return std::isnan(lp) ? kNegInf : lp;
}

struct StudentT {
  Eigen::VectorXd mean;
  Eigen::MatrixXd chol;  // lower factor of the scale matrix
  double dof = 5.0;
  double log_norm = 0.0;

  StudentT(Eigen::VectorXd mu, const Eigen::MatrixXd& scale, double nu) : mean(std::move(mu)), dof(nu) {
    // Short or sticky chains give a singular covariance; escalate a ridge.
    const double base = std::max(scale.diagonal().mean(), 1e-300);
    Eigen::LLT<Eigen::MatrixXd> llt(scale);
    for (double eps = 1e-10; llt.info() != Eigen::Success; eps *= 10.0) {
      if (eps > 1.0) throw std::domain_error("evidence: t scale not positive definite");
      llt.compute(scale + eps * base * Eigen::MatrixXd::Identity(scale.rows(), scale.cols()));
    }
    chol = llt.matrixL();
    const double d = static_cast<double>(mean.size());
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < chol.rows(); ++i) log_det += 2.0 * std::log(chol(i, i));
    log_norm = std::lgamma(0.5 * (nu + d)) - std::lgamma(0.5 * nu) -
               0.5 * d * std::log(nu * std::numbers::pi) - 0.5 * log_det;
  }

  Eigen::VectorXd sample(Rng& rng) const {
    Eigen::VectorXd z(mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    const double chi2 = 2.0 * rng.gamma(0.5 * dof, 1.0);
    return mean + chol * z * std::sqrt(dof / chi2);
  }

  double logpdf(const Eigen::VectorXd& v) const {
    const Eigen::VectorXd r = chol.triangularView<Eigen::Lower>().solve(v - mean);
    const double d = static_cast<double>(mean.size());
    return log_norm - 0.5 * (dof + d) * std::log1p(r.squaredNorm() / dof);
  }
};

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

EvidenceEstimate estimate_log_evidence(ModelId model, std::span<const double> y, std::size_t S,
                                       std::size_t L, const SamplerConfig& cfg, Rng& rng) {
  if (S < 2) throw std::invalid_argument("evidence: need at least 2 prior draws");
  if (L == 0) throw std::invalid_argument("evidence: particle count must be >= 1");
  if (y.empty()) {
    EvidenceEstimate est;
    est.n_prior_draws = S;
    est.particles = L;
    return est;
  }
  const Prior prior = cfg.resolved_prior(y.size());
  make_mask(model, cfg);
  std::vector<double> log_w(S);
  for (std::size_t s = 0; s < S; ++s) {
    Rng draw_rng = rng.split(s);
    const Params theta = apply_fixed(model, prior_sample(model, prior, draw_rng), cfg);
    log_w[s] = run_sir(model, theta, y, L, draw_rng, FilterOptions{1.0, cfg.resample_threshold})
                   .log_marginal;
  }
  return summarize(log_w, L);
}

EvidenceEstimate estimate_log_evidence_from_chain(ModelId model, std::span<const double> y,
                                                  const ChainRecord& record, std::size_t S,
                                                  std::size_t L, const SamplerConfig& cfg,
                                                  Rng& rng, const DefensiveOptions& options) {
  if (S < 2) throw std::invalid_argument("evidence: need at least 2 draws");
  if (L == 0) throw std::invalid_argument("evidence: particle count must be >= 1");
  if (!(options.prior_fraction > 0.0 && options.prior_fraction <= 1.0)) {
    throw std::invalid_argument("evidence: prior_fraction must lie in (0, 1]");
  }
  if (!(options.dof > 2.0) || !(options.inflation > 0.0)) {
    throw std::invalid_argument("evidence: need dof > 2 and inflation > 0");
  }
  if (record.model != model) throw std::invalid_argument("evidence: chain is for another model");
  if (record.thetas.size() < 2) throw std::invalid_argument("evidence: chain has too few draws");
  if (y.empty()) {
    EvidenceEstimate est;
    est.n_prior_draws = S;
    est.particles = L;
    return est;
  }
  const Prior prior = cfg.resolved_prior(y.size());
  const ParameterMask mask = make_mask(model, cfg);
  const auto d = static_cast<Eigen::Index>(mask.free_count());

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& t : record.thetas) mean += mask.extract(t);
  mean /= static_cast<double>(record.thetas.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (const auto& t : record.thetas) {
    const Eigen::VectorXd r = mask.extract(t) - mean;
    cov += r * r.transpose();
  }
  cov /= static_cast<double>(record.thetas.size() - 1);
  // A stuck coordinate would make the t degenerate; give it a floor.
  for (Eigen::Index i = 0; i < d; ++i) {
    cov(i, i) = std::max(cov(i, i), 1e-12 * (1.0 + mean[i] * mean[i]));
  }
  const StudentT t(mean, options.inflation * cov, options.dof);

  const double log_alpha = std::log(options.prior_fraction);
  const double log_beta =
      options.prior_fraction < 1.0 ? std::log1p(-options.prior_fraction) : kNegInf;
  const Eigen::VectorXd base = pack(model, apply_fixed(model, prior_sample(model, prior, rng), cfg));

  std::vector<double> log_w(S);
  for (std::size_t s = 0; s < S; ++s) {
    Rng draw_rng = rng.split(s);
    Eigen::VectorXd packed;
    if (draw_rng.uniform() < options.prior_fraction) {
      packed = pack(model, apply_fixed(model, prior_sample(model, prior, draw_rng), cfg));
    } else {
      packed = mask.insert(base, t.sample(draw_rng));
    }
    const double lp = free_prior_logpdf(model, mask, packed, prior);
    if (lp == kNegInf) {
      log_w[s] = kNegInf;
      continue;
    }
    const double log_q = log_add(log_alpha + lp, log_beta + t.logpdf(mask.extract(packed)));
    const Params theta = unpack(model, packed);
    const double ll =
        run_sir(model, theta, y, L, draw_rng, FilterOptions{1.0, cfg.resample_threshold})
            .log_marginal;
    log_w[s] = ll == kNegInf ? kNegInf : ll + lp - log_q;
  }
  return summarize(log_w, L);
}

double bayes_factor(const EvidenceEstimate& zi, const EvidenceEstimate& zj) {
  if (!std::isfinite(zi.log_z) || !std::isfinite(zj.log_z)) {
    throw std::invalid_argument("bayes_factor: evidence estimate is not finite");
  }
  return std::exp(zi.log_z - zj.log_z);
}

std::vector<std::vector<double>> log_bf_table(std::span<const EvidenceEstimate> estimates) {
  if (estimates.size() < 2) throw std::invalid_argument("bf_table: need at least 2 models");
  std::vector<std::vector<double>> table(estimates.size(),
                                         std::vector<double>(estimates.size(), 0.0));
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    for (std::size_t j = 0; j < estimates.size(); ++j) {
      if (!std::isfinite(estimates[i].log_z) || !std::isfinite(estimates[j].log_z)) {
        throw std::invalid_argument("bf_table: evidence estimate is not finite");
      }
      table[i][j] = estimates[i].log_z - estimates[j].log_z;
    }
  }
  return table;
}

std::vector<std::vector<double>> bf_table(std::span<const EvidenceEstimate> estimates) {
  auto table = log_bf_table(estimates);
  for (auto& row : table) {
    for (double& v : row) v = std::exp(v);
  }
  return table;
}

}  // namespace adpmcmc
