#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adpmcmc/model_zoo.hpp"
#include "adpmcmc/pmcmc_sampler.hpp"
#include "adpmcmc/rng.hpp"

namespace adpmcmc {

struct TimeSeriesData {
  std::vector<std::int64_t> t;  ///< strictly increasing
  std::vector<double> y;        ///< log abundances
  std::string source;
  bool log_transformed = false;

  std::size_t size() const { return y.size(); }
};

/// Throws std::invalid_argument on empty data, non-finite y or time not
/// strictly increasing.
void validate(const TimeSeriesData& d);

struct SyntheticTruth {
  ModelId model = ModelId::M0;
  Params theta;
  std::vector<double> x_true;
  std::vector<double> y;
  std::uint64_t seed = 0;
};

/// x_t = f(x_{t-1}) + eps_t, y_t = x_t + w_t for t = 1..T. Zero variances are
/// allowed here and give a noiseless series. Throws std::domain_error naming
/// the step when the state leaves the representable range.
SyntheticTruth simulate_dataset(ModelId model, const Params& p, std::size_t T, Rng& rng);

/// Two-column CSV (time, abundance) with an optional header row. With
/// log_transform the second column is an abundance and must be positive;
/// otherwise it is taken as already on the log scale.
TimeSeriesData parse_series(std::string_view text, bool log_transform,
                            std::string source = "<memory>");
TimeSeriesData load_series(const std::filesystem::path& path, bool log_transform);

/// Writes "t,y" rows at full precision; load_series(path, false) reads it back
/// exactly.
std::string format_series(const TimeSeriesData& d);
void write_series(const TimeSeriesData& d, const std::filesystem::path& path);

TimeSeriesData to_series(const SyntheticTruth& truth);

// JSON. Params are written by packed name: {"b0": .., "sigma_eps2": .., ...}.
nlohmann::json params_to_json(ModelId model, const Params& p);
Params params_from_json(ModelId model, const nlohmann::json& j);

nlohmann::json prior_to_json(const Prior& p);
Prior prior_from_json(const nlohmann::json& j, Prior base = {});

/// Unknown keys are rejected so that typos do not pass silently.
nlohmann::json sampler_config_to_json(ModelId model, const SamplerConfig& cfg);
SamplerConfig sampler_config_from_json(ModelId model, const nlohmann::json& j,
                                       SamplerConfig base = {});

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const nlohmann::json& j, const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

/// One row per recorded draw: iteration, accepted, log_marginal, then the
/// packed parameters.
void write_draws_csv(const ChainRecord& record, const std::filesystem::path& path);
/// Restores names, thetas, flags and log marginals (no paths or D-terms).
ChainRecord read_draws_csv(ModelId model, const std::filesystem::path& path);

/// Per time step: mean, 2.5%, 50% and 97.5% quantiles of the stored paths.
void write_path_bands_csv(const ChainRecord& record, std::span<const std::int64_t> t,
                          const std::filesystem::path& path);

}  // namespace adpmcmc
