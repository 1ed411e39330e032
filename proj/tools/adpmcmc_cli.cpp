// adpmcmc command-line front end.
//
// Exit codes: 0 success, 2 argument error, 3 numeric domain error, 1 other.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "adpmcmc/bcrlb.hpp"
#include "adpmcmc/bench.hpp"
#include "adpmcmc/diagnostics.hpp"
#include "adpmcmc/evidence.hpp"
#include "adpmcmc/io.hpp"
#include "adpmcmc/model_zoo.hpp"
#include "adpmcmc/pmcmc_sampler.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace adpmcmc;

namespace {

constexpr const char* kConfigEnv = "ADPMCMC_CONFIG";

// The environment variable wins over --config.
std::optional<fs::path> config_path(const std::string& flag) {
  if (const char* env = std::getenv(kConfigEnv); env && *env) return fs::path(env);
  if (!flag.empty()) return fs::path(flag);
  return std::nullopt;
}

struct RunConfig {
  SamplerConfig sampler;
  json raw = json::object();
};

RunConfig load_config(ModelId model, const std::string& flag) {
  RunConfig rc;
  if (auto p = config_path(flag)) {
    rc.raw = read_json(*p);
    if (rc.raw.contains("sampler")) {
      rc.sampler = sampler_config_from_json(model, rc.raw.at("sampler"));
    } else {
      rc.sampler = sampler_config_from_json(model, rc.raw);
    }
  }
  return rc;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

json series_json(const TimeSeriesData& d) {
  return json{{"t", d.t}, {"y", d.y}, {"source", d.source}, {"log_transformed", d.log_transformed}};
}

TimeSeriesData series_from_json(const json& j) {
  TimeSeriesData d;
  d.t = j.at("t").get<std::vector<std::int64_t>>();
  d.y = j.at("y").get<std::vector<double>>();
  d.source = j.value("source", "");
  d.log_transformed = j.value("log_transformed", false);
  validate(d);
  return d;
}

json diagnostics_json(const ChainRecord& rec, std::size_t max_lag) {
  json out = json::object();
  for (std::size_t k = 0; k < rec.names.size(); ++k) {
    const auto tr = rec.trace(k);
    json entry;
    entry["geweke_z"] = tr.size() >= 40 ? json(geweke_z(tr)) : json(nullptr);
    const std::size_t lag = std::min(max_lag, tr.size() - 1);
    const AcfResult a = acf(tr, lag);
    entry["acf"] = a.values;
    entry["acf_constant"] = a.constant;
    out[rec.names[k]] = entry;
  }
  return out;
}

json summary_json(const ChainRecord& rec) {
  const MmseEstimate est = mmse(rec);
  json params = json::object();
  for (std::size_t k = 0; k < rec.names.size(); ++k) {
    const auto tr = rec.trace(k);
    const Interval ci = credible_interval(tr, 0.95);
    const BatchMeans bm = batch_means(tr, std::min<std::size_t>(50, tr.size()));
    params[rec.names[k]] = {{"mmse", bm.mean}, {"mc_se", bm.std_error},
                            {"ci95", {ci.lower, ci.upper}}};
  }
  const Equilibria eq = equilibria(rec.model, est.theta);
  json e{{"classification", to_string(eq.classification)}};
  if (eq.carrying_capacity) e["K"] = *eq.carrying_capacity;
  if (eq.allee_threshold) e["C"] = *eq.allee_threshold;
  return json{{"parameters", params},
              {"path_mmse", est.path},
              {"equilibria_at_mmse", e},
              {"acceptance", rec.acceptance_rate()},
              {"stage_acceptance", rec.stage_acceptance},
              {"proposal_fallbacks", rec.proposal_fallbacks},
              {"draws", rec.size()}};
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string model;
  std::string params;
  std::string params_file;
  std::size_t T = 50;
  std::uint64_t seed = 1;
  std::string out;
  std::string truth_out;
};

int run_simulate(const SimulateArgs& a) {
  const ModelId model = parse_model(a.model);
  json pj;
  if (!a.params.empty()) {
    try {
      pj = json::parse(a.params);
    } catch (const json::parse_error& e) {
      throw std::invalid_argument(std::string("--params: ") + e.what());
    }
  } else if (!a.params_file.empty()) {
    pj = read_json(a.params_file);
  } else {
    throw std::invalid_argument("simulate: give --params or --params-file");
  }
  const Params p = params_from_json(model, pj);
  Rng rng(a.seed);
  const SyntheticTruth truth = simulate_dataset(model, p, a.T, rng);
  TimeSeriesData d = to_series(truth);
  if (a.out.empty() || a.out == "-") {
    std::cout << format_series(d);
  } else {
    write_series(d, a.out);
  }
  if (!a.truth_out.empty()) {
    write_json(json{{"model", to_string(model)},
                    {"params", params_to_json(model, p)},
                    {"seed", a.seed},
                    {"x_true", truth.x_true},
                    {"y", truth.y}},
               a.truth_out);
  }
  return 0;
}

// ---- fit --------------------------------------------------------------------

struct FitArgs {
  std::string data;
  std::string model;
  std::string config;
  std::string out_dir;
  bool log_transform = false;
  bool pilot = false;
  std::optional<std::size_t> particles;
  std::optional<std::size_t> n_sample;
  std::optional<std::uint64_t> seed;
};

int run_fit(const FitArgs& a) {
  const ModelId model = parse_model(a.model);
  const TimeSeriesData data = load_series(a.data, a.log_transform);
  RunConfig rc = load_config(model, a.config);
  if (a.particles) rc.sampler.particles = *a.particles;
  if (a.n_sample) rc.sampler.n_sample = *a.n_sample;
  if (a.seed) rc.sampler.seed = *a.seed;
  if (rc.sampler.n_sample == 0) throw std::invalid_argument("fit: n_sample must be >= 1");
  if (a.pilot) apply_pilot(model, data.y, rc.sampler);

  const ChainRecord rec = run_chain(model, data.y, rc.sampler);
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  write_draws_csv(rec, dir / "draws.csv");
  write_path_bands_csv(rec, data.t, dir / "paths.csv");

  json summary = summary_json(rec);
  summary["model"] = to_string(model);
  summary["config"] = sampler_config_to_json(model, rc.sampler);
  summary["data"] = series_json(data);
  summary["diagnostics"] = diagnostics_json(rec, 50);
  if (rc.sampler.record_bcrlb) {
    const BcrlbResult b = bcrlb_marginal(model, data.y, rec, rc.sampler);
    summary["bcrlb"] = {{"avg_root_bound", b.avg_root_bound},
                        {"per_t_bounds", b.per_t_bounds},
                        {"draws_used", b.draws_used}};
  }
  write_json(summary, dir / "summary.json");
  std::cout << "fit " << to_string(model) << ": " << rec.size() << " draws, acceptance "
            << fixed(rec.acceptance_rate(), 3) << ", output in " << dir.string() << "\n";
  return 0;
}

struct FitOutput {
  ModelId model;
  SamplerConfig cfg;
  TimeSeriesData data;
  ChainRecord record;
};

FitOutput load_fit(const std::string& dir_str) {
  const fs::path dir(dir_str);
  const json s = read_json(dir / "summary.json");
  FitOutput f{parse_model(s.at("model").get<std::string>()), {}, {}, {}};
  f.cfg = sampler_config_from_json(f.model, s.at("config"));
  f.data = series_from_json(s.at("data"));
  f.record = read_draws_csv(f.model, dir / "draws.csv");
  if (f.record.size() == 0) throw std::invalid_argument(dir_str + ": no draws");
  return f;
}

// ---- evidence / compare -----------------------------------------------------

struct EvidenceArgs {
  std::string data;
  std::vector<std::string> models{"M0", "M1", "M2", "M3", "M4"};
  std::size_t S = 10000;
  std::size_t L = 500;
  std::uint64_t seed = 1;
  std::string method = "prior";
  std::string config;
  bool log_transform = false;
  std::string out;
};

json evidence_json(ModelId m, const EvidenceEstimate& e, const std::string& method) {
  json j{{"model", to_string(m)},
         {"std_error", e.std_error},
         {"n_prior_draws", e.n_prior_draws},
         {"particles", e.particles},
         {"underflow", e.underflow},
         {"method", method}};
  j["log_z"] = std::isfinite(e.log_z) ? json(e.log_z) : json(nullptr);
  return j;
}

int run_evidence(const EvidenceArgs& a) {
  if (a.method != "prior" && a.method != "chain") {
    throw std::invalid_argument("evidence: --method must be 'prior' or 'chain'");
  }
  const TimeSeriesData data = load_series(a.data, a.log_transform);
  json out{{"data", a.data}, {"seed", a.seed}, {"estimates", json::array()}};
  for (const auto& name : a.models) {
    const ModelId m = parse_model(name);
    RunConfig rc = load_config(m, a.config);
    Rng rng = Rng(a.seed).split(static_cast<std::uint64_t>(m));
    EvidenceEstimate e;
    if (a.method == "prior") {
      e = estimate_log_evidence(m, data.y, a.S, a.L, rc.sampler, rng);
    } else {
      rc.sampler.record_bcrlb = false;
      const ChainRecord rec = run_chain(m, data.y, rc.sampler);
      e = estimate_log_evidence_from_chain(m, data.y, rec, a.S, a.L, rc.sampler, rng);
    }
    out["estimates"].push_back(evidence_json(m, e, a.method));
    std::cout << to_string(m) << "  log_z = " << fixed(e.log_z, 4) << "  (se "
              << fixed(e.std_error, 4) << ")\n";
  }
  if (!a.out.empty()) write_json(out, a.out);
  return 0;
}

struct CompareArgs {
  std::vector<std::string> inputs;
  std::string out;
};

int run_compare(const CompareArgs& a) {
  std::vector<std::string> labels;
  std::vector<EvidenceEstimate> ests;
  for (const auto& path : a.inputs) {
    const json j = read_json(path);
    const json list = j.contains("estimates") ? j.at("estimates") : json::array({j});
    for (const auto& e : list) {
      if (e.at("log_z").is_null()) {
        throw std::domain_error(path + ": evidence for " + e.at("model").get<std::string>() +
                                " underflowed");
      }
      EvidenceEstimate est;
      est.log_z = e.at("log_z").get<double>();
      est.std_error = e.value("std_error", 0.0);
      labels.push_back(e.at("model").get<std::string>());
      ests.push_back(est);
    }
  }
  if (ests.size() < 2) throw std::invalid_argument("compare: need at least two evidence estimates");
  const auto log_bf = log_bf_table(ests);
  // Integer rounding is presentation only; the JSON keeps raw logs.
  std::cout << std::setw(6) << "BF_ij";
  for (const auto& l : labels) std::cout << std::setw(12) << l;
  std::cout << "\n";
  for (std::size_t i = 0; i < ests.size(); ++i) {
    std::cout << std::setw(6) << labels[i];
    for (std::size_t j = 0; j < ests.size(); ++j) {
      const double bf = std::exp(log_bf[i][j]);
      std::cout << std::setw(12) << (std::isfinite(bf) ? fixed(std::round(bf), 0) : "inf");
    }
    std::cout << "\n";
  }
  if (!a.out.empty()) write_json(json{{"models", labels}, {"log_bf", log_bf}}, a.out);
  return 0;
}

// ---- bcrlb / diagnose -------------------------------------------------------

struct BcrlbArgs {
  std::string fit_dir;
  std::size_t stride = 10;
  bool root_then_average = false;
  std::string out;
};

int run_bcrlb(const BcrlbArgs& a) {
  const FitOutput f = load_fit(a.fit_dir);
  const auto agg = a.root_then_average ? BoundAggregation::RootThenAverage
                                       : BoundAggregation::VarianceThenRoot;
  const BcrlbResult b = bcrlb_marginal(f.model, f.data.y, f.record, f.cfg, agg, a.stride);
  std::cout << to_string(f.model) << " average root BCRLB " << fixed(b.avg_root_bound, 4)
            << " over " << b.draws_used << " draws\n";
  if (!a.out.empty()) {
    write_json(json{{"model", to_string(f.model)},
                    {"aggregation", a.root_then_average ? "root_then_average" : "variance_then_root"},
                    {"avg_root_bound", b.avg_root_bound},
                    {"per_t_bounds", b.per_t_bounds},
                    {"draws_used", b.draws_used}},
               a.out);
  }
  return 0;
}

struct DiagnoseArgs {
  std::string fit_dir;
  std::size_t max_lag = 50;
  std::string out;
};

int run_diagnose(const DiagnoseArgs& a) {
  const FitOutput f = load_fit(a.fit_dir);
  const json d = diagnostics_json(f.record, a.max_lag);
  std::cout << to_string(f.model) << " acceptance " << fixed(f.record.acceptance_rate(), 3) << "\n";
  for (const auto& name : f.record.names) {
    const json& e = d.at(name);
    std::cout << "  " << std::setw(11) << name << "  geweke "
              << (e.at("geweke_z").is_null() ? std::string("n/a")
                                             : fixed(e.at("geweke_z").get<double>(), 3));
    const auto& r = e.at("acf");
    if (r.size() > 1) std::cout << "  acf[1] " << fixed(r.at(1).get<double>(), 3);
    std::cout << "\n";
  }
  if (!a.out.empty()) {
    write_json(json{{"model", to_string(f.model)},
                    {"acceptance", f.record.acceptance_rate()},
                    {"parameters", d}},
               a.out);
  }
  return 0;
}

// ---- bench ------------------------------------------------------------------

struct BenchArgs {
  std::string study = "rmse";
  std::size_t datasets = 5;
  std::size_t n_anneal = 5000;
  std::size_t n_burn = 5000;
  std::size_t n_sample = 10000;
  std::size_t particles = 500;
  std::vector<std::size_t> particle_sweep{20, 100, 500};
  double noise_divisor = 1.0;
  double prior_noise_divisor = 1.0;
  std::size_t evidence_draws = 2000;
  std::uint64_t seed = 1;
  std::string out;
};

int run_bench(const BenchArgs& a) {
  SamplerConfig sc;
  sc.n_anneal = a.n_anneal;
  sc.n_burn = a.n_burn;
  sc.n_sample = a.n_sample;
  sc.particles = a.particles;
  sc.seed = a.seed;
  json out{{"study", a.study}};
  if (a.study == "rmse") {
    RmseStudyConfig c;
    c.n_datasets = a.datasets;
    c.sampler = sc;
    const RmseStudyResult r = rmse_bcrlb_study(c);
    for (std::size_t d = 0; d < r.rows.size(); ++d) {
      const auto& row = r.rows[d];
      std::cout << "dataset " << d + 1 << "  RMSE " << fixed(row.rmse_mean, 3) << " ("
                << fixed(row.rmse_sd, 3) << ")  BCRLB " << fixed(row.bcrlb, 3) << "\n";
      out["rows"].push_back({{"rmse_mean", row.rmse_mean}, {"rmse_sd", row.rmse_sd},
                             {"bcrlb", row.bcrlb}, {"acceptance", row.acceptance}});
    }
    std::cout << "mean  RMSE " << fixed(r.rmse_mean, 3) << " (" << fixed(r.rmse_sd, 3)
              << ")  BCRLB " << fixed(r.bcrlb_mean, 3) << " (" << fixed(r.bcrlb_sd, 3) << ")\n";
    out["rmse_mean"] = r.rmse_mean;
    out["rmse_sd"] = r.rmse_sd;
    out["bcrlb_mean"] = r.bcrlb_mean;
    out["bcrlb_sd"] = r.bcrlb_sd;
  } else if (a.study == "acceptance") {
    AcceptanceSweepConfig c;
    c.particles = a.particle_sweep;
    c.n_seeds = a.datasets;
    c.sampler = sc;
    const AcceptanceSweepResult r = acceptance_sweep(c);
    for (std::size_t k = 0; k < r.particles.size(); ++k) {
      std::cout << "L = " << std::setw(5) << r.particles[k] << "  acceptance "
                << fixed(r.mean_acceptance[k], 4) << "\n";
    }
    out["particles"] = r.particles;
    out["mean_acceptance"] = r.mean_acceptance;
    out["per_seed"] = r.per_seed;
  } else if (a.study == "bf") {
    BayesFactorStudyConfig c;
    c.n_datasets = a.datasets;
    c.eps_divisor = a.noise_divisor;
    c.w_divisor = a.noise_divisor;
    c.prior_noise_divisor = a.prior_noise_divisor;
    c.sampler = sc;
    c.evidence_draws = a.evidence_draws;
    c.evidence_particles = a.particles;
    const BayesFactorStudyResult r = bayes_factor_study(c);
    std::cout << "data  BF01  BF02  BF03  BF04  BF12  BF13  BF14  BF23  BF24  BF34\n";
    for (std::size_t d = 0; d < r.datasets.size(); ++d) {
      const auto& ds = r.datasets[d];
      std::cout << std::setw(4) << d + 1;
      for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = i + 1; j < 5; ++j) {
          std::cout << std::setw(6) << fixed(std::round(std::exp(ds.log_bf[i][j])), 0);
        }
      }
      std::cout << "\n";
      json lz = json::array();
      for (const auto& e : ds.evidence) lz.push_back(e.log_z);
      out["datasets"].push_back({{"truth", params_to_json(ModelId::M4, ds.truth)},
                                 {"log_z", lz},
                                 {"log_bf", ds.log_bf}});
    }
  } else {
    throw std::invalid_argument("bench: --study must be rmse, acceptance or bf");
  }
  if (!a.out.empty()) write_json(out, a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive particle MCMC for population state-space models"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate a synthetic series");
  s->add_option("--model", sim.model, "M0..M4")->required();
  s->add_option("--params", sim.params, "JSON object of parameters");
  s->add_option("--params-file", sim.params_file, "JSON file of parameters");
  s->add_option("-T,--length", sim.T, "series length")->check(CLI::PositiveNumber);
  s->add_option("--seed", sim.seed);
  s->add_option("-o,--out", sim.out, "output CSV (default stdout)");
  s->add_option("--truth-out", sim.truth_out, "JSON with the latent path");

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Run the three-stage sampler");
  f->add_option("--data", fit.data)->required();
  f->add_option("--model", fit.model)->required();
  f->add_option("--config", fit.config, std::string("JSON config; ") + kConfigEnv + " overrides");
  f->add_option("--out-dir", fit.out_dir)->required();
  f->add_flag("--log-transform", fit.log_transform, "second column holds raw abundances");
  f->add_flag("--pilot", fit.pilot,
              "start at a least-squares fit and shape the fixed proposal by its covariance");
  f->add_option("--particles", fit.particles);
  f->add_option("--n-sample", fit.n_sample);
  f->add_option("--seed", fit.seed);

  EvidenceArgs ev;
  auto* e = app.add_subcommand("evidence", "Estimate log evidence per model");
  e->add_option("--data", ev.data)->required();
  e->add_option("--models", ev.models);
  e->add_option("-S,--draws", ev.S)->check(CLI::Range(2, 100000000));
  e->add_option("-L,--particles", ev.L)->check(CLI::PositiveNumber);
  e->add_option("--seed", ev.seed);
  e->add_option("--method", ev.method, "prior (default) or chain");
  e->add_option("--config", ev.config);
  e->add_flag("--log-transform", ev.log_transform);
  e->add_option("-o,--out", ev.out);

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "Bayes factor table from evidence outputs");
  c->add_option("inputs", cmp.inputs)->required();
  c->add_option("-o,--out", cmp.out);

  BcrlbArgs bc;
  auto* b = app.add_subcommand("bcrlb", "Cramer-Rao bound from a fit directory");
  b->add_option("--fit-dir", bc.fit_dir)->required();
  b->add_option("--stride", bc.stride)->check(CLI::PositiveNumber);
  b->add_flag("--root-then-average", bc.root_then_average);
  b->add_option("-o,--out", bc.out);

  DiagnoseArgs dg;
  auto* d = app.add_subcommand("diagnose", "Geweke, ACF and acceptance for a fit directory");
  d->add_option("--fit-dir", dg.fit_dir)->required();
  d->add_option("--max-lag", dg.max_lag);
  d->add_option("-o,--out", dg.out);

  BenchArgs bn;
  auto* n = app.add_subcommand("bench", "Synthetic studies");
  n->add_option("--study", bn.study, "rmse, acceptance or bf");
  n->add_option("--datasets", bn.datasets)->check(CLI::PositiveNumber);
  n->add_option("--n-anneal", bn.n_anneal);
  n->add_option("--n-burn", bn.n_burn);
  n->add_option("--n-sample", bn.n_sample)->check(CLI::PositiveNumber);
  n->add_option("--particles", bn.particles)->check(CLI::PositiveNumber);
  n->add_option("--particle-sweep", bn.particle_sweep);
  n->add_option("--noise-divisor", bn.noise_divisor, "divides both generating noise variances");
  n->add_option("--prior-noise-divisor", bn.prior_noise_divisor,
                "divides the inverse-gamma scale of the fitting prior");
  n->add_option("--evidence-draws", bn.evidence_draws);
  n->add_option("--seed", bn.seed);
  n->add_option("-o,--out", bn.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*s) return run_simulate(sim);
    if (*f) return run_fit(fit);
    if (*e) return run_evidence(ev);
    if (*c) return run_compare(cmp);
    if (*b) return run_bcrlb(bc);
    if (*d) return run_diagnose(dg);
    if (*n) return run_bench(bn);
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const std::domain_error& err) {
    std::cerr << "numeric error: " << err.what() << "\n";
    return 3;
  } catch (const nlohmann::json::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
