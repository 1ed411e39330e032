#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "adpmcmc/bench.hpp"
#include "adpmcmc/io.hpp"

using namespace adpmcmc;
namespace fs = std::filesystem;

#ifndef ADPMCMC_CLI_PATH
#error "ADPMCMC_CLI_PATH must point at the CLI binary"
#endif

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("adpmcmc_test_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args, const std::string& env = "") const {
    const std::string cmd = env + (env.empty() ? "" : " ") + ADPMCMC_CLI_PATH + " " + args + " > " +
                            (dir_ / "stdout.txt").string() + " 2> " + (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string stderr_text() const { return slurp(dir_ / "stderr.txt"); }
  std::string stdout_text() const { return slurp(dir_ / "stdout.txt"); }
  static std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Fits every model to a synthetic series, estimates evidence from each
  // chain and compares, as for a real census series of the same length.
  void pipeline(const std::string& tag, std::size_t T, std::uint64_t seed) {
    Rng rng(seed);
    const SyntheticTruth s = simulate_dataset(ModelId::M2, theta_logistic_reference(), T, rng);
    TimeSeriesData d = to_series(s);
    for (double& y : d.y) y = std::exp(y);  // raw abundances
    write_series(d, path(tag + ".csv"));
    write_json(nlohmann::json{{"sampler",
                               {{"particles", 50}, {"n_anneal", 200}, {"n_burn", 200}, {"n_sample", 600}}}},
               path(tag + "_cfg.json"));
    std::string inputs;
    for (ModelId m : kAllModels) {
      const std::string name = to_string(m);
      const std::string fit_dir = path(tag + "_" + name);
      ASSERT_EQ(run("fit --log-transform --data " + path(tag + ".csv") + " --model " + name +
                    " --config " + path(tag + "_cfg.json") + " --out-dir " + fit_dir),
                0)
          << name;
      const auto summary = read_json(fit_dir + "/summary.json");
      EXPECT_EQ(summary.at("path_mmse").size(), T);
      EXPECT_TRUE(summary.at("bcrlb").at("avg_root_bound").get<double>() > 0.0);
      ASSERT_EQ(run("diagnose --fit-dir " + fit_dir + " -o " + fit_dir + "/diag.json"), 0);
      ASSERT_EQ(run("bcrlb --fit-dir " + fit_dir + " --stride 20 -o " + fit_dir + "/bcrlb.json"), 0);
      const std::string ev = path(tag + "_ev_" + name + ".json");
      ASSERT_EQ(run("evidence --log-transform --method chain --models " + name + " -S 200 -L 50 --config " +
                    path(tag + "_cfg.json") + " --data " + path(tag + ".csv") + " -o " + ev),
                0);
      inputs += " " + ev;
    }
    ASSERT_EQ(run("compare" + inputs + " -o " + path(tag + "_bf.json")), 0);
    const auto bf = read_json(path(tag + "_bf.json"));
    const auto& t = bf.at("log_bf");
    ASSERT_EQ(t.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_EQ(t[i][i].get<double>(), 0.0);
      for (std::size_t j = 0; j < 5; ++j) {
        EXPECT_NEAR(t[i][j].get<double>(), -t[j][i].get<double>(), 1e-12);
      }
    }
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, HelpAndArgumentErrors) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("simulate --model M9 -T 5"), 2);
  EXPECT_EQ(run("simulate --model M0 -T 0"), 2);
  EXPECT_EQ(run("simulate --model M0 -T 5 --params '{\"b7\": 1}'"), 2);
  EXPECT_EQ(run("fit --data " + path("missing.csv") + " --model M0 --out-dir " + path("o")), 2);
}

TEST_F(Cli, MalformedDataIsAnArgumentError) {
  write_text(path("bad.csv"), "1,2\n2,abc\n");
  EXPECT_EQ(run("fit --data " + path("bad.csv") + " --model M0 --out-dir " + path("o")), 2);
  EXPECT_NE(stderr_text().find(":2"), std::string::npos) << stderr_text();
  write_text(path("zero.csv"), "1,5\n2,0\n");
  EXPECT_EQ(run("fit --log-transform --data " + path("zero.csv") + " --model M0 --out-dir " + path("o")), 2);
}

TEST_F(Cli, OverflowIsADomainError) {
  EXPECT_EQ(run("simulate --model M1 -T 50 --params '{\"b0\": 0, \"b1\": 2, \"sigma_eps2\": 0, "
                "\"sigma_w2\": 0, \"x0\": 3}'"),
            3);
  EXPECT_NE(stderr_text().find("step"), std::string::npos) << stderr_text();
}

TEST_F(Cli, SimulateWritesLoadableSeries) {
  write_json(params_to_json(ModelId::M2, theta_logistic_reference()), path("p.json"));
  ASSERT_EQ(run("simulate --model M2 -T 25 --seed 4 --params-file " + path("p.json") + " -o " + path("s.csv") + " --truth-out " +
                path("truth.json")),
            0);
  const TimeSeriesData d = load_series(path("s.csv"), false);
  EXPECT_EQ(d.size(), 25u);
  const auto truth = read_json(path("truth.json"));
  EXPECT_EQ(truth.at("x_true").size(), 25u);
  ASSERT_EQ(run("simulate --model M2 -T 25 --seed 4 --params-file " + path("p.json") + " -o " + path("s2.csv")), 0);
  EXPECT_EQ(slurp(path("s.csv")), slurp(path("s2.csv")));
}

TEST_F(Cli, EnvironmentOverridesConfigPath) {
  write_text(path("s.csv"), "1,0.1\n2,0.2\n3,0.35\n4,0.4\n5,0.6\n");
  write_json(nlohmann::json{{"particles", 10}, {"n_anneal", 5}, {"n_burn", 5}, {"n_sample", 7}},
             path("good.json"));
  write_json(nlohmann::json{{"not_a_key", 1}}, path("bad.json"));
  const std::string fit = "fit --data " + path("s.csv") + " --model M0 --out-dir " + path("fit");
  EXPECT_EQ(run(fit + " --config " + path("bad.json")), 2);
  EXPECT_EQ(run(fit + " --config " + path("bad.json"), "ADPMCMC_CONFIG=" + path("good.json")), 0);
  EXPECT_EQ(read_draws_csv(ModelId::M0, path("fit") + "/draws.csv").size(), 7u);
  EXPECT_EQ(run(fit + " --config " + path("good.json"), "ADPMCMC_CONFIG=" + path("bad.json")), 2);
}

TEST_F(Cli, PilotStartIsRecordedInSummary) {
  write_text(path("s.csv"), "1,0.1\n2,0.25\n3,0.3\n4,0.5\n5,0.55\n6,0.7\n7,0.8\n");
  write_json(nlohmann::json{{"particles", 10}, {"n_anneal", 5}, {"n_burn", 5}, {"n_sample", 7}},
             path("c.json"));
  ASSERT_EQ(run("fit --pilot --data " + path("s.csv") + " --model M0 --config " + path("c.json") +
                " --out-dir " + path("fit")),
            0);
  const auto config = read_json(path("fit") + "/summary.json").at("config");
  ASSERT_TRUE(config.contains("initial"));
  EXPECT_EQ(config.at("fixed_covariance").size(), 4u);
}

TEST_F(Cli, EndToEndOnMonthlyLengthSeries) {
  pipeline("long", 120, 8);
}

TEST_F(Cli, EndToEndOnShortAnnualSeries) {
  pipeline("short", 18, 9);
}

TEST_F(Cli, CompareNeedsTwoModels) {
  write_json(nlohmann::json{{"estimates", {{{"model", "M0"}, {"log_z", -3.0}}}}}, path("one.json"));
  EXPECT_EQ(run("compare " + path("one.json")), 2);
  write_json(nlohmann::json{{"estimates", {{{"model", "M0"}, {"log_z", nullptr}},
                                           {{"model", "M1"}, {"log_z", -3.0}}}}},
             path("under.json"));
  EXPECT_EQ(run("compare " + path("under.json")), 3);
}
