#include "adpmcmc/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "adpmcmc/diagnostics.hpp"

namespace adpmcmc {
namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_int(std::string_view s, std::int64_t& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && !s.empty();
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  const std::string buf(s);
  char* end = nullptr;
  out = std::strtod(buf.c_str(), &end);
  return end == buf.c_str() + buf.size();
}

[[noreturn]] void parse_error(const std::string& source, std::size_t line, const std::string& msg) {
  std::ostringstream os;
  os << source << ":" << line << ": " << msg;
  throw std::invalid_argument(os.str());
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void validate(const TimeSeriesData& d) {
  if (d.y.empty()) throw std::invalid_argument("time series is empty");
  if (d.t.size() != d.y.size()) throw std::invalid_argument("time and value columns differ in length");
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    if (!std::isfinite(d.y[i])) throw std::invalid_argument("time series has a non-finite value");
    if (i > 0 && d.t[i] <= d.t[i - 1]) {
      throw std::invalid_argument("time indices must be strictly increasing");
    }
  }
}

SyntheticTruth simulate_dataset(ModelId model, const Params& p, std::size_t T, Rng& rng) {
  if (T == 0) throw std::invalid_argument("simulate_dataset: T must be >= 1");
  if (p.b.size() != coefficient_count(model)) {
    throw std::invalid_argument("simulate_dataset: wrong coefficient count for " + to_string(model));
  }
  if (!(p.sigma_eps2 >= 0.0) || !(p.sigma_w2 >= 0.0)) {
    throw std::invalid_argument("simulate_dataset: variances must be non-negative");
  }
  SyntheticTruth out;
  out.model = model;
  out.theta = p;
  out.x_true.reserve(T);
  out.y.reserve(T);
  const double sd_eps = std::sqrt(p.sigma_eps2);
  const double sd_w = std::sqrt(p.sigma_w2);
  double x = p.x0;
  for (std::size_t t = 1; t <= T; ++t) {
    const double m = transition_mean_unchecked(model, x, p);
    x = m + sd_eps * rng.normal();
    if (!std::isfinite(x) || std::abs(x) > kMaxAbsLogState) {
      std::ostringstream os;
      os << "simulate_dataset: " << to_string(model) << " state overflowed at step " << t;
      throw std::domain_error(os.str());
    }
    out.x_true.push_back(x);
    out.y.push_back(x + sd_w * rng.normal());
  }
  return out;
}

TimeSeriesData parse_series(std::string_view text, bool log_transform, std::string source) {
  TimeSeriesData d;
  d.source = std::move(source);
  d.log_transformed = log_transform;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool seen_row = false;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto cols = split(line, ',');
    if (cols.size() != 2) parse_error(d.source, line_no, "expected 2 columns");
    std::int64_t t = 0;
    double v = 0.0;
    const bool ok_t = parse_int(cols[0], t);
    const bool ok_v = parse_double(cols[1], v);
    if (!ok_t || !ok_v) {
      if (!seen_row && !ok_t) {
        seen_row = true;  // header
        continue;
      }
      parse_error(d.source, line_no, ok_t ? "bad value" : "bad time index");
    }
    seen_row = true;
    if (log_transform) {
      if (!(v > 0.0)) parse_error(d.source, line_no, "abundance must be positive to take logs");
      v = std::log(v);
    }
    if (!std::isfinite(v)) parse_error(d.source, line_no, "value is not finite");
    if (!d.t.empty() && t <= d.t.back()) {
      parse_error(d.source, line_no, "time index is not strictly increasing");
    }
    d.t.push_back(t);
    d.y.push_back(v);
  }
  if (d.y.empty()) throw std::invalid_argument(d.source + ": no data rows");
  return d;
}

TimeSeriesData load_series(const std::filesystem::path& path, bool log_transform) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_series(ss.str(), log_transform, path.string());
}

std::string format_series(const TimeSeriesData& d) {
  validate(d);
  std::string out = "t,y\n";
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    out += std::to_string(d.t[i]);
    out += ',';
    out += format_double(d.y[i]);
    out += '\n';
  }
  return out;
}

void write_series(const TimeSeriesData& d, const std::filesystem::path& path) {
  write_text(path, format_series(d));
}

TimeSeriesData to_series(const SyntheticTruth& truth) {
  TimeSeriesData d;
  d.y = truth.y;
  d.t.resize(truth.y.size());
  for (std::size_t i = 0; i < d.t.size(); ++i) d.t[i] = static_cast<std::int64_t>(i + 1);
  d.source = "simulated " + to_string(truth.model);
  return d;
}

json params_to_json(ModelId model, const Params& p) {
  const auto names = packed_names(model);
  const Eigen::VectorXd v = pack(model, p);
  json j = json::object();
  for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = v[static_cast<Eigen::Index>(i)];
  return j;
}

Params params_from_json(ModelId model, const json& j) {
  if (!j.is_object()) throw std::invalid_argument("params: expected a JSON object");
  const auto names = packed_names(model);
  for (const auto& [key, value] : j.items()) {
    if (std::find(names.begin(), names.end(), key) == names.end()) {
      throw std::invalid_argument("params: '" + key + "' is not a parameter of " + to_string(model));
    }
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!j.contains(names[i])) throw std::invalid_argument("params: missing '" + names[i] + "'");
    v[static_cast<Eigen::Index>(i)] = j.at(names[i]).get<double>();
  }
  return unpack(model, v);
}

json prior_to_json(const Prior& p) {
  return json{{"coef_mean", p.coef_mean}, {"coef_sd", p.coef_sd},   {"b4_shape", p.b4_shape},
              {"b4_scale", p.b4_scale},   {"ig_alpha", p.ig_alpha}, {"ig_beta", p.ig_beta},
              {"x0_mean", p.x0_mean},     {"x0_sd", p.x0_sd}};
}

Prior prior_from_json(const json& j, Prior base) {
  static const char* keys[] = {"coef_mean", "coef_sd", "b4_shape", "b4_scale",
                               "ig_alpha",  "ig_beta", "x0_mean",  "x0_sd"};
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(std::begin(keys), std::end(keys), [&](const char* k) { return key == k; }) ==
        std::end(keys)) {
      throw std::invalid_argument("prior: unknown key '" + key + "'");
    }
  }
  read_if(j, "coef_mean", base.coef_mean);
  read_if(j, "coef_sd", base.coef_sd);
  read_if(j, "b4_shape", base.b4_shape);
  read_if(j, "b4_scale", base.b4_scale);
  read_if(j, "ig_alpha", base.ig_alpha);
  read_if(j, "ig_beta", base.ig_beta);
  read_if(j, "x0_mean", base.x0_mean);
  read_if(j, "x0_sd", base.x0_sd);
  if (!(base.coef_sd > 0.0) || !(base.b4_shape > 0.0) || !(base.b4_scale > 0.0) ||
      !(base.ig_alpha > 0.0) || !(base.ig_beta > 0.0) || !(base.x0_sd > 0.0)) {
    throw std::invalid_argument("prior: scale and shape hyperparameters must be positive");
  }
  return base;
}

json sampler_config_to_json(ModelId model, const SamplerConfig& cfg) {
  json j{{"particles", cfg.particles},
         {"n_anneal", cfg.n_anneal},
         {"n_burn", cfg.n_burn},
         {"n_sample", cfg.n_sample},
         {"seed", cfg.seed},
         {"resample_threshold", cfg.resample_threshold},
         {"gamma_min", cfg.gamma_min},
         {"w1", cfg.w1},
         {"fixed_scale_multiplier", cfg.fixed_scale_multiplier},
         {"anneal_scale_multiplier", cfg.anneal_scale_multiplier},
         {"path_thin", cfg.path_thin},
         {"record_bcrlb", cfg.record_bcrlb},
         {"max_init_attempts", cfg.max_init_attempts},
         {"fixed", cfg.fixed}};
  if (cfg.prior) j["prior"] = prior_to_json(*cfg.prior);
  if (cfg.initial) j["initial"] = params_to_json(model, *cfg.initial);
  if (cfg.fixed_covariance) {
    const Eigen::MatrixXd& c = *cfg.fixed_covariance;
    json rows = json::array();
    for (Eigen::Index r = 0; r < c.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(c.cols()));
      for (Eigen::Index k = 0; k < c.cols(); ++k) row[static_cast<std::size_t>(k)] = c(r, k);
      rows.push_back(row);
    }
    j["fixed_covariance"] = rows;
  }
  return j;
}

SamplerConfig sampler_config_from_json(ModelId model, const json& j, SamplerConfig base) {
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  static const char* keys[] = {"particles",   "n_anneal",          "n_burn",
                               "n_sample",    "seed",              "resample_threshold",
                               "gamma_min",   "w1",                "fixed_scale_multiplier",
                               "anneal_scale_multiplier",          "path_thin",
                               "record_bcrlb", "max_init_attempts", "fixed",
                               "prior",       "initial",           "fixed_covariance"};
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(std::begin(keys), std::end(keys), [&](const char* k) { return key == k; }) ==
        std::end(keys)) {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  try {
    read_if(j, "particles", base.particles);
    read_if(j, "n_anneal", base.n_anneal);
    read_if(j, "n_burn", base.n_burn);
    read_if(j, "n_sample", base.n_sample);
    read_if(j, "seed", base.seed);
    read_if(j, "resample_threshold", base.resample_threshold);
    read_if(j, "gamma_min", base.gamma_min);
    read_if(j, "w1", base.w1);
    read_if(j, "fixed_scale_multiplier", base.fixed_scale_multiplier);
    read_if(j, "anneal_scale_multiplier", base.anneal_scale_multiplier);
    read_if(j, "path_thin", base.path_thin);
    read_if(j, "record_bcrlb", base.record_bcrlb);
    read_if(j, "max_init_attempts", base.max_init_attempts);
    if (j.contains("fixed")) base.fixed = j.at("fixed").get<std::map<std::string, double>>();
    if (j.contains("prior")) base.prior = prior_from_json(j.at("prior"), base.prior.value_or(Prior{}));
    if (j.contains("initial")) base.initial = params_from_json(model, j.at("initial"));
    if (j.contains("fixed_covariance")) {
      const auto rows = j.at("fixed_covariance").get<std::vector<std::vector<double>>>();
      const auto n = static_cast<Eigen::Index>(rows.size());
      Eigen::MatrixXd c(n, n);
      for (Eigen::Index r = 0; r < n; ++r) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != n) {
          throw std::invalid_argument("config: fixed_covariance must be square");
        }
        for (Eigen::Index k = 0; k < n; ++k) c(r, k) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)];
      }
      base.fixed_covariance = c;
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (base.particles == 0) throw std::invalid_argument("config: particles must be >= 1");
  if (!(base.w1 >= 0.0 && base.w1 <= 1.0)) throw std::invalid_argument("config: w1 must lie in [0, 1]");
  if (!(base.resample_threshold >= 0.0 && base.resample_threshold <= 1.0)) {
    throw std::invalid_argument("config: resample_threshold must lie in [0, 1]");
  }
  if (!(base.gamma_min > 0.0 && base.gamma_min <= 1.0)) {
    throw std::invalid_argument("config: gamma_min must lie in (0, 1]");
  }
  make_mask(model, base);
  return base;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

void write_json(const json& j, const std::filesystem::path& path) {
  write_text(path, j.dump(2) + "\n");
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_draws_csv(const ChainRecord& record, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path.string());
  out << "iteration,accepted,log_marginal";
  for (const auto& n : record.names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < record.size(); ++i) {
    out << i << ',' << int(record.accepted[i]) << ',' << format_double(record.log_marginals[i]);
    for (Eigen::Index k = 0; k < record.thetas[i].size(); ++k) {
      out << ',' << format_double(record.thetas[i][k]);
    }
    out << '\n';
  }
}

ChainRecord read_draws_csv(ModelId model, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  ChainRecord record;
  record.model = model;
  record.names = packed_names(model);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) parse_error(path.string(), 1, "empty draws file");
  ++line_no;
  const auto header = split(trim(line), ',');
  if (header.size() != record.names.size() + 3) {
    parse_error(path.string(), line_no, "column count does not match " + to_string(model));
  }
  for (std::size_t i = 0; i < record.names.size(); ++i) {
    if (header[i + 3] != record.names[i]) {
      parse_error(path.string(), line_no, "unexpected column '" + std::string(header[i + 3]) + "'");
    }
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cols = split(trim(line), ',');
    if (cols.size() != header.size()) parse_error(path.string(), line_no, "wrong column count");
    std::int64_t acc = 0;
    double lm = 0.0;
    if (!parse_int(cols[1], acc) || !parse_double(cols[2], lm)) {
      parse_error(path.string(), line_no, "bad number");
    }
    Eigen::VectorXd theta(static_cast<Eigen::Index>(record.names.size()));
    for (std::size_t k = 0; k < record.names.size(); ++k) {
      if (!parse_double(cols[k + 3], theta[static_cast<Eigen::Index>(k)])) {
        parse_error(path.string(), line_no, "bad number");
      }
    }
    record.accepted.push_back(acc != 0);
    record.log_marginals.push_back(lm);
    record.thetas.push_back(std::move(theta));
  }
  record.accepted.shrink_to_fit();
  return record;
}

void write_path_bands_csv(const ChainRecord& record, std::span<const std::int64_t> t,
                          const std::filesystem::path& path) {
  if (record.paths.empty()) throw std::invalid_argument("path bands: no stored paths");
  const std::size_t T = record.paths.front().size();
  if (t.size() != T) throw std::invalid_argument("path bands: time index length mismatch");
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path.string());
  out << "t,mean,q025,q500,q975\n";
  std::vector<double> column(record.paths.size());
  for (std::size_t k = 0; k < T; ++k) {
    double sum = 0.0;
    for (std::size_t j = 0; j < record.paths.size(); ++j) {
      column[j] = record.paths[j][k];
      sum += column[j];
    }
    out << t[k] << ',' << format_double(sum / static_cast<double>(column.size())) << ','
        << format_double(quantile(column, 0.025)) << ',' << format_double(quantile(column, 0.5))
        << ',' << format_double(quantile(column, 0.975)) << '\n';
  }
}

}  // namespace adpmcmc
