#include "adpmcmc/model_zoo.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace adpmcmc {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double normal_logpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -kLogSqrt2Pi - std::log(sd) - 0.5 * z * z;
}

double gamma_logpdf(double x, double shape, double scale) {
  if (!(x > 0.0)) return kNegInf;
  return (shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) - shape * std::log(scale);
}

double inverse_gamma_logpdf(double x, double alpha, double beta) {
  if (!(x > 0.0)) return kNegInf;
  return alpha * std::log(beta) - std::lgamma(alpha) - (alpha + 1.0) * std::log(x) - beta / x;
}

// log(b4 + e^x) without overflow for large x.
double log_b4_plus_exp(double b4, double x) {
  if (b4 <= 0.0) return b4 == 0.0 ? x : kNaN;
  const double log_b4 = std::log(b4);
  if (x > log_b4) return x + std::log1p(b4 * std::exp(-x));
  return log_b4 + std::log1p(std::exp(x - log_b4));
}

void check_coefficients(ModelId model, const Params& p) {
  if (p.b.size() != coefficient_count(model)) {
    std::ostringstream os;
    os << to_string(model) << " expects " << coefficient_count(model) << " coefficients, got "
       << p.b.size();
    throw std::invalid_argument(os.str());
  }
}

[[noreturn]] void throw_domain(ModelId model, double x_prev, const char* what) {
  std::ostringstream os;
  os.precision(17);
  os << what << " of " << to_string(model) << " is not finite at x_prev = " << x_prev;
  throw std::domain_error(os.str());
}

// Largest-root bisection on a bracket where g(lo) and g(hi) differ in sign.
template <class F>
double bisect(F&& g, double lo, double hi) {
  double g_lo = g(lo);
  for (int i = 0; i < 400; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double g_mid = g(mid);
    if (g_mid == 0.0) return mid;
    if ((g_mid < 0.0) == (g_lo < 0.0)) {
      lo = mid;
      g_lo = g_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Equilibria ricker_like(double growth, double slope) {
  Equilibria eq;
  if (slope < 0.0 && growth > 0.0) {
    eq.carrying_capacity = -growth / slope;
    eq.classification = EquilibriumClass::StableK;
  }
  return eq;
}

Equilibria mate_limited(const Params& p) {
  const double b0 = p.b[0], b1 = p.b[1], b4 = p.b[2];
  Equilibria eq;
  if (!(b1 < 0.0) || !(b4 > 0.0)) return eq;
  // Per-capita log growth g(x) = x - log(b4 + e^x) + b0 + b1 e^x is concave in
  // N with its maximum at N* solving N^2 + b4 N + b4/b1 = 0.
  auto g = [&](double x) { return x - log_b4_plus_exp(b4, x) + b0 + b1 * std::exp(x); };
  const double n_star = 0.5 * (-b4 + std::sqrt(b4 * b4 - 4.0 * b4 / b1));
  const double x_star = std::log(n_star);
  if (!(g(x_star) > 0.0)) return eq;
  double lo = x_star - 1.0;
  while (g(lo) > 0.0) lo -= 2.0 * (x_star - lo);
  double hi = x_star + 1.0;
  while (g(hi) > 0.0) hi += 2.0 * (hi - x_star);
  eq.allee_threshold = std::exp(bisect(g, lo, x_star));
  eq.carrying_capacity = std::exp(bisect(g, x_star, hi));
  eq.classification = EquilibriumClass::StrongAllee;
  return eq;
}

Equilibria flexible_allee(const Params& p) {
  const double b5 = p.b[0], b6 = p.b[1], b7 = p.b[2];
  if (b7 == 0.0) return ricker_like(b5, b6);
  Equilibria eq;
  const double disc = b6 * b6 - 4.0 * b5 * b7;
  if (disc < 0.0 || !(b7 < 0.0)) return eq;
  const double root = std::sqrt(disc);
  const double k = (-b6 - root) / (2.0 * b7);
  const double c = (-b6 + root) / (2.0 * b7);
  if (!(k > 0.0)) return eq;
  eq.carrying_capacity = k;
  eq.allee_threshold = c;
  if (c > 0.0 && c < k) {
    eq.classification = EquilibriumClass::StrongAllee;
  } else if (c < 0.0) {
    eq.classification = EquilibriumClass::WeakAllee;
  } else {
    eq.classification = EquilibriumClass::StableK;
  }
  return eq;
}

}  // namespace

std::string to_string(ModelId model) {
  switch (model) {
    case ModelId::M0: return "M0";
    case ModelId::M1: return "M1";
    case ModelId::M2: return "M2";
    case ModelId::M3: return "M3";
    case ModelId::M4: return "M4";
  }
  return "M?";
}

ModelId parse_model(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  if (s.size() == 2 && s[0] == 'M') s.erase(0, 1);
  if (s.size() == 1 && s[0] >= '0' && s[0] <= '4') return static_cast<ModelId>(s[0] - '0');
  throw std::invalid_argument("unknown model '" + std::string(text) + "' (expected M0..M4)");
}

std::size_t coefficient_count(ModelId model) {
  switch (model) {
    case ModelId::M0: return 1;
    case ModelId::M1: return 2;
    default: return 3;
  }
}

std::size_t parameter_dimension(ModelId model) { return coefficient_count(model) + 2; }

std::vector<std::string> coefficient_names(ModelId model) {
  switch (model) {
    case ModelId::M0: return {"b0"};
    case ModelId::M1: return {"b0", "b1"};
    case ModelId::M2: return {"b0", "b2", "b3"};
    case ModelId::M3: return {"b0", "b1", "b4"};
    case ModelId::M4: return {"b5", "b6", "b7"};
  }
  return {};
}

std::vector<std::string> packed_names(ModelId model) {
  auto names = coefficient_names(model);
  names.insert(names.end(), {"sigma_eps2", "sigma_w2", "x0"});
  return names;
}

void validate(ModelId model, const Params& p) {
  check_coefficients(model, p);
  if (!(p.sigma_eps2 > 0.0) || !(p.sigma_w2 > 0.0)) {
    throw std::invalid_argument("noise variances must be positive");
  }
  if (model == ModelId::M3 && !(p.b[2] > 0.0)) {
    throw std::invalid_argument("M3 requires b4 > 0");
  }
  for (double v : p.b) {
    if (!std::isfinite(v)) throw std::invalid_argument("coefficients must be finite");
  }
  if (!std::isfinite(p.x0)) throw std::invalid_argument("x0 must be finite");
}

Eigen::VectorXd pack(ModelId model, const Params& p) {
  check_coefficients(model, p);
  const auto k = static_cast<Eigen::Index>(p.b.size());
  Eigen::VectorXd v(k + 3);
  for (Eigen::Index i = 0; i < k; ++i) v[i] = p.b[static_cast<std::size_t>(i)];
  v[k] = p.sigma_eps2;
  v[k + 1] = p.sigma_w2;
  v[k + 2] = p.x0;
  return v;
}

Params unpack(ModelId model, const Eigen::Ref<const Eigen::VectorXd>& packed) {
  const auto k = static_cast<Eigen::Index>(coefficient_count(model));
  if (packed.size() != k + 3) {
    throw std::invalid_argument("packed parameter vector has wrong length for " +
                                to_string(model));
  }
  Params p;
  p.b.assign(packed.data(), packed.data() + k);
  p.sigma_eps2 = packed[k];
  p.sigma_w2 = packed[k + 1];
  p.x0 = packed[k + 2];
  return p;
}

double transition_mean_unchecked(ModelId model, double x, const Params& p) noexcept {
  if (!(std::abs(x) <= kMaxAbsLogState)) return kNaN;
  const double* b = p.b.data();
  switch (model) {
    case ModelId::M0: return x + b[0];
    case ModelId::M1: return x + b[0] + b[1] * std::exp(x);
    case ModelId::M2: return x + b[0] + b[1] * std::exp(b[2] * x);
    case ModelId::M3: return 2.0 * x - log_b4_plus_exp(b[2], x) + b[0] + b[1] * std::exp(x);
    case ModelId::M4: {
      const double n = std::exp(x);
      return x + b[0] + b[1] * n + b[2] * n * n;
    }
  }
  return kNaN;
}

double transition_mean_derivative_unchecked(ModelId model, double x, const Params& p) noexcept {
  if (!(std::abs(x) <= kMaxAbsLogState)) return kNaN;
  const double* b = p.b.data();
  switch (model) {
    case ModelId::M0: return 1.0;
    case ModelId::M1: return 1.0 + b[1] * std::exp(x);
    case ModelId::M2: return 1.0 + b[1] * b[2] * std::exp(b[2] * x);
    case ModelId::M3: {
      const double n = std::exp(x);
      // e^x / (b4 + e^x) written as 1 / (1 + b4 e^{-x}) to stay finite.
      return 2.0 - 1.0 / (1.0 + b[2] * std::exp(-x)) + b[1] * n;
    }
    case ModelId::M4: {
      const double n = std::exp(x);
      return 1.0 + b[1] * n + 2.0 * b[2] * n * n;
    }
  }
  return kNaN;
}

double transition_mean(ModelId model, double x_prev, const Params& p) {
  check_coefficients(model, p);
  const double f = transition_mean_unchecked(model, x_prev, p);
  if (!std::isfinite(f)) throw_domain(model, x_prev, "transition mean");
  return f;
}

double transition_mean_derivative(ModelId model, double x_prev, const Params& p) {
  check_coefficients(model, p);
  const double d = transition_mean_derivative_unchecked(model, x_prev, p);
  if (!std::isfinite(d)) throw_domain(model, x_prev, "transition derivative");
  return d;
}

double transition_logpdf(ModelId model, double x_prev, double x, const Params& p) {
  if (!(p.sigma_eps2 > 0.0)) throw std::invalid_argument("sigma_eps2 must be positive");
  return normal_logpdf(x, transition_mean(model, x_prev, p), std::sqrt(p.sigma_eps2));
}

double observation_logpdf(double y, double x, double sigma_w2) {
  if (!(sigma_w2 > 0.0)) throw std::invalid_argument("sigma_w2 must be positive");
  const double r = y - x;
  return -kLogSqrt2Pi - 0.5 * std::log(sigma_w2) - 0.5 * r * r / sigma_w2;
}

Prior default_prior(std::size_t series_length) {
  if (series_length < 3) {
    throw std::invalid_argument("default prior needs a series of length >= 3");
  }
  Prior prior;
  prior.ig_alpha = static_cast<double>(series_length) / 2.0;
  prior.ig_beta = 2.0 * (prior.ig_alpha - 1.0) / 10.0;
  return prior;
}

double prior_coordinate_logpdf(ModelId model, std::size_t packed_index, double value,
                               const Prior& prior) {
  const std::size_t k = coefficient_count(model);
  if (packed_index < k) {
    if (model == ModelId::M3 && packed_index == 2) {
      return gamma_logpdf(value, prior.b4_shape, prior.b4_scale);
    }
    return normal_logpdf(value, prior.coef_mean, prior.coef_sd);
  }
  if (packed_index == k || packed_index == k + 1) {
    return inverse_gamma_logpdf(value, prior.ig_alpha, prior.ig_beta);
  }
  if (packed_index == k + 2) return normal_logpdf(value, prior.x0_mean, prior.x0_sd);
  throw std::invalid_argument("prior: packed index out of range");
}

double prior_coordinate_sample(ModelId model, std::size_t packed_index, const Prior& prior,
                               Rng& rng) {
  const std::size_t k = coefficient_count(model);
  if (packed_index < k) {
    if (model == ModelId::M3 && packed_index == 2) {
      // Gamma draws can round to exactly zero for shape < 1.
      double v = 0.0;
      do {
        v = rng.gamma(prior.b4_shape, prior.b4_scale);
      } while (!(v > 0.0));
      return v;
    }
    return rng.normal(prior.coef_mean, prior.coef_sd);
  }
  if (packed_index == k || packed_index == k + 1) {
    return prior.ig_beta / rng.gamma(prior.ig_alpha, 1.0);
  }
  if (packed_index == k + 2) return rng.normal(prior.x0_mean, prior.x0_sd);
  throw std::invalid_argument("prior: packed index out of range");
}

double prior_logpdf(ModelId model, const Params& p, const Prior& prior) {
  const Eigen::VectorXd v = pack(model, p);
  double lp = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    lp += prior_coordinate_logpdf(model, static_cast<std::size_t>(i), v[i], prior);
  }
  return std::isnan(lp) ? kNegInf : lp;
}

double prior_logpdf(ModelId model, const Params& p, std::size_t series_length) {
  return prior_logpdf(model, p, default_prior(series_length));
}

Params prior_sample(ModelId model, const Prior& prior, Rng& rng) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(coefficient_count(model) + 3));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = prior_coordinate_sample(model, static_cast<std::size_t>(i), prior, rng);
  }
  return unpack(model, v);
}

Params prior_sample(ModelId model, std::size_t series_length, Rng& rng) {
  return prior_sample(model, default_prior(series_length), rng);
}

std::string to_string(EquilibriumClass c) {
  switch (c) {
    case EquilibriumClass::NoPositiveEquilibrium: return "NoPositiveEquilibrium";
    case EquilibriumClass::StableK: return "StableK";
    case EquilibriumClass::StrongAllee: return "StrongAllee";
    case EquilibriumClass::WeakAllee: return "WeakAllee";
  }
  return "?";
}

Equilibria equilibria(ModelId model, const Params& p) {
  check_coefficients(model, p);
  switch (model) {
    case ModelId::M0: return {};
    case ModelId::M1: return ricker_like(p.b[0], p.b[1]);
    case ModelId::M2: {
      const double b0 = p.b[0], b2 = p.b[1], b3 = p.b[2];
      Equilibria eq;
      if (b2 == 0.0 || b3 == 0.0) return eq;
      const double ratio = -b0 / b2;
      const bool stable = (b0 > 0.0 && b3 > 0.0) || (b0 < 0.0 && b3 < 0.0);
      if (ratio > 0.0 && stable) {
        eq.carrying_capacity = std::pow(ratio, 1.0 / b3);
        eq.classification = EquilibriumClass::StableK;
      }
      return eq;
    }
    case ModelId::M3: return mate_limited(p);
    case ModelId::M4: return flexible_allee(p);
  }
  return {};
}

}  // namespace adpmcmc
