#pragma once

// Population-growth state-space models on the log-abundance scale.
//
//   x_t = f(x_{t-1}; b) + eps_t,   eps_t ~ N(0, sigma_eps2)
//   y_t = x_t + w_t,               w_t   ~ N(0, sigma_w2)
//
// with x = log N and, per model,
//   M0  f = x + b0
//   M1  f = x + b0 + b1 e^x                          (Ricker)
//   M2  f = x + b0 + b2 e^{b3 x}                     (theta-logistic)
//   M3  f = 2x - log(b4 + e^x) + b0 + b1 e^x         (mate-limited)
//   M4  f = x + b5 + b6 e^x + b7 e^{2x}              (flexible Allee)

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adpmcmc/rng.hpp"

namespace adpmcmc {

enum class ModelId { M0, M1, M2, M3, M4 };

inline constexpr ModelId kAllModels[] = {ModelId::M0, ModelId::M1, ModelId::M2, ModelId::M3,
                                         ModelId::M4};

std::string to_string(ModelId model);
/// Accepts "M0".."M4" (case-insensitive) or "0".."4".
ModelId parse_model(std::string_view text);

/// Number of growth coefficients b (1, 2, 3, 3, 3).
std::size_t coefficient_count(ModelId model);
/// Coefficients plus the two noise variances (3, 4, 5, 5, 5).
std::size_t parameter_dimension(ModelId model);
/// Coefficient names in storage order, e.g. {"b0", "b2", "b3"} for M2.
std::vector<std::string> coefficient_names(ModelId model);
/// Names of the packed vector: coefficients, sigma_eps2, sigma_w2, x0.
std::vector<std::string> packed_names(ModelId model);

/// Static parameters. `b` holds this model's coefficients in the order of
/// coefficient_names(); x0 is the log-abundance at t = 0.
struct Params {
  std::vector<double> b;
  double sigma_eps2 = 1.0;
  double sigma_w2 = 1.0;
  double x0 = 0.0;

  bool operator==(const Params&) const = default;
};

/// Throws std::invalid_argument if `p` has the wrong coefficient count or
/// non-positive variances, or violates b4 > 0 under M3.
void validate(ModelId model, const Params& p);

/// Packs to [b..., sigma_eps2, sigma_w2, x0].
Eigen::VectorXd pack(ModelId model, const Params& p);
Params unpack(ModelId model, const Eigen::Ref<const Eigen::VectorXd>& packed);

/// Exponent guard: |x| beyond this is a numeric domain error.
inline constexpr double kMaxAbsLogState = 700.0;

/// f(x_prev; b). Returns a non-finite value instead of throwing when the
/// state is outside the guard or the result overflows. Hot-path version.
double transition_mean_unchecked(ModelId model, double x_prev, const Params& p) noexcept;
/// df/dx_prev; same conventions as transition_mean_unchecked.
double transition_mean_derivative_unchecked(ModelId model, double x_prev,
                                            const Params& p) noexcept;

/// f(x_prev; b). Throws std::domain_error naming model and input if the
/// result is not finite or |x_prev| > 700.
double transition_mean(ModelId model, double x_prev, const Params& p);
double transition_mean_derivative(ModelId model, double x_prev, const Params& p);

/// log N(x; f(x_prev), sigma_eps2).
double transition_logpdf(ModelId model, double x_prev, double x, const Params& p);
/// log N(y; x, sigma_w2).
double observation_logpdf(double y, double x, double sigma_w2);

/// Prior hyperparameters. Coefficients ~ N(coef_mean, coef_sd^2) except b4 ~
/// Gamma(b4_shape, b4_scale); both variances ~ InvGamma(ig_alpha, ig_beta);
/// x0 ~ N(x0_mean, x0_sd^2).
struct Prior {
  double coef_mean = 0.0;
  double coef_sd = 1.0;
  double b4_shape = 1.0;
  double b4_scale = 10.0;
  double ig_alpha = 25.0;
  double ig_beta = 4.8;
  double x0_mean = 0.0;
  double x0_sd = 1.0;
};

/// alpha = T/2, beta = 2(alpha - 1)/10. Requires T >= 3.
Prior default_prior(std::size_t series_length);

/// Log prior density of one packed coordinate (see packed_names()).
double prior_coordinate_logpdf(ModelId model, std::size_t packed_index, double value,
                               const Prior& prior);
/// One draw of a packed coordinate from its prior.
double prior_coordinate_sample(ModelId model, std::size_t packed_index, const Prior& prior,
                               Rng& rng);

/// Sum of component log densities; -inf outside the support.
double prior_logpdf(ModelId model, const Params& p, const Prior& prior);
double prior_logpdf(ModelId model, const Params& p, std::size_t series_length);

Params prior_sample(ModelId model, const Prior& prior, Rng& rng);
Params prior_sample(ModelId model, std::size_t series_length, Rng& rng);

enum class EquilibriumClass { NoPositiveEquilibrium, StableK, StrongAllee, WeakAllee };

std::string to_string(EquilibriumClass c);

/// Carrying capacity K and Allee threshold C on the natural scale.
struct Equilibria {
  std::optional<double> carrying_capacity;
  std::optional<double> allee_threshold;
  EquilibriumClass classification = EquilibriumClass::NoPositiveEquilibrium;
};

Equilibria equilibria(ModelId model, const Params& p);

}  // namespace adpmcmc
