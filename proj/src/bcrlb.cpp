#include "adpmcmc/bcrlb.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "adpmcmc/pmcmc_sampler.hpp"

namespace adpmcmc {

double fim_step(double j_prev, double d11, double d12, double d22) {
  const double denom = j_prev + d11;
  if (!(denom > 0.0)) {
    std::ostringstream os;
    os << "fim_step: J_prev + D11 = " << denom << " is not positive";
    throw std::domain_error(os.str());
  }
  return d22 - d12 * d12 / denom;
}

DTerms estimate_d_terms(ModelId model, const ParticleCloud& cloud, const Params& p) {
  const double inv_q = 1.0 / p.sigma_eps2;
  double m1 = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double w = cloud.weights[i];
    if (w == 0.0) continue;
    const double phi = transition_mean_derivative_unchecked(model, cloud.x[i], p);
    m1 += w * phi;
    m2 += w * phi * phi;
  }
  return DTerms{m2 * inv_q, -m1 * inv_q, inv_q + 1.0 / p.sigma_w2};
}

DTerms estimate_d_terms_at(ModelId model, double x, const Params& p) {
  const double phi = transition_mean_derivative(model, x, p);
  const double inv_q = 1.0 / p.sigma_eps2;
  return DTerms{phi * phi * inv_q, -phi * inv_q, inv_q + 1.0 / p.sigma_w2};
}

std::vector<DTerms> d_terms_from_filter(ModelId model, const FilterOutput& out, const Params& p) {
  std::vector<DTerms> d;
  if (out.clouds.empty()) return d;
  d.reserve(out.clouds.size());
  d.push_back(estimate_d_terms_at(model, p.x0, p));
  for (std::size_t t = 1; t < out.clouds.size(); ++t) {
    d.push_back(estimate_d_terms(model, out.clouds[t - 1], p));
  }
  return d;
}

FimTrace fim_trace(double sigma_eps2, std::span<const DTerms> d_terms) {
  FimTrace trace;
  trace.d_terms.assign(d_terms.begin(), d_terms.end());
  trace.information.reserve(d_terms.size());
  trace.bound.reserve(d_terms.size());
  double j = 1.0 / sigma_eps2;
  for (const DTerms& d : d_terms) {
    j = fim_step(j, d);
    trace.information.push_back(j);
    trace.bound.push_back(1.0 / j);
  }
  return trace;
}

BcrlbResult aggregate_bounds(std::span<const FimTrace> traces, BoundAggregation aggregation) {
  if (traces.empty()) throw std::invalid_argument("bcrlb: no draws to aggregate");
  const std::size_t T = traces.front().bound.size();
  BcrlbResult result;
  result.per_t_bounds.assign(T, 0.0);
  result.draws_used = traces.size();
  double root_sum = 0.0;
  for (const FimTrace& tr : traces) {
    if (tr.bound.size() != T) throw std::invalid_argument("bcrlb: ragged FIM traces");
    double draw_sum = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      result.per_t_bounds[t] += tr.bound[t];
      draw_sum += tr.bound[t];
    }
    root_sum += std::sqrt(draw_sum / static_cast<double>(T));
  }
  const double n = static_cast<double>(traces.size());
  double total = 0.0;
  for (double& b : result.per_t_bounds) {
    b /= n;
    total += b;
  }
  result.avg_root_bound = aggregation == BoundAggregation::VarianceThenRoot
                              ? std::sqrt(total / static_cast<double>(T))
                              : root_sum / n;
  return result;
}

BcrlbResult bcrlb_marginal(ModelId model, std::span<const double> y, const ChainRecord& record,
                           const SamplerConfig& cfg, BoundAggregation aggregation,
                           std::size_t stride) {
  if (record.thetas.empty()) throw std::invalid_argument("bcrlb_marginal: chain record is empty");
  if (stride == 0) stride = 1;
  std::vector<FimTrace> traces;
  traces.reserve(record.size() / stride + 1);

  if (!record.d_terms.empty()) {
    for (std::size_t j = 0; j < record.size(); j += stride) {
      if (record.d_terms[j].empty()) continue;
      const Params p = unpack(model, record.thetas[j]);
      traces.push_back(fim_trace(p.sigma_eps2, record.d_terms[j]));
    }
  } else {
    if (y.empty()) throw std::invalid_argument("bcrlb_marginal: observations required");
    Rng rng = Rng(cfg.seed).split(0xb0c71b);
    for (std::size_t j = 0; j < record.size(); j += stride) {
      const Params p = unpack(model, record.thetas[j]);
      const FilterOutput out =
          run_sir(model, p, y, cfg.particles, rng, FilterOptions{1.0, cfg.resample_threshold});
      if (out.collapsed()) continue;
      traces.push_back(fim_trace(p.sigma_eps2, d_terms_from_filter(model, out, p)));
    }
  }
  if (traces.empty()) throw std::domain_error("bcrlb_marginal: no usable draws");
  return aggregate_bounds(traces, aggregation);
}

KalmanResult kalman_information_filter_m0(ModelId model, const Params& p,
                                          std::span<const double> y) {
  if (model != ModelId::M0 || p.b.size() != 1) {
    throw std::invalid_argument("kalman_information_filter_m0: only the linear model M0 is exact");
  }
  if (!(p.sigma_eps2 > 0.0) || !(p.sigma_w2 > 0.0)) {
    throw std::invalid_argument("kalman_information_filter_m0: variances must be positive");
  }
  const double q = p.sigma_eps2;
  const double r = p.sigma_w2;
  KalmanResult res;
  res.filtered_mean.reserve(y.size());
  res.filtered_var.reserve(y.size());
  res.exact_information.reserve(y.size());

  double m = p.x0;
  double var = 0.0;
  double j = 1.0 / q;
  const DTerms d{1.0 / q, -1.0 / q, 1.0 / q + 1.0 / r};
  for (double yt : y) {
    const double m_pred = m + p.b[0];
    const double var_pred = var + q;
    const double s = var_pred + r;
    const double innov = yt - m_pred;
    res.log_likelihood += -0.5 * (std::log(2.0 * std::numbers::pi * s) + innov * innov / s);
    const double gain = var_pred / s;
    m = m_pred + gain * innov;
    var = (1.0 - gain) * var_pred;
    res.filtered_mean.push_back(m);
    res.filtered_var.push_back(var);

    j = fim_step(j, d);
    res.exact_information.push_back(j);
  }
  return res;
}

}  // namespace adpmcmc
