#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "adpmcmc/model_zoo.hpp"

using namespace adpmcmc;

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

Params m2_reference() { return Params{{0.15, -0.125, 0.1}, 0.2209, 0.1521, std::log(1.27)}; }
Params m4_reference() { return Params{{-0.05, 0.0525, -0.0025}, 0.01, 0.01, std::log(2.0)}; }

}  // namespace

TEST(ModelZoo, DimensionsAndNames) {
  const std::size_t dims[] = {3, 4, 5, 5, 5};
  for (ModelId m : kAllModels) {
    EXPECT_EQ(parameter_dimension(m), dims[static_cast<int>(m)]);
    EXPECT_EQ(packed_names(m).size(), coefficient_count(m) + 3);
    EXPECT_EQ(parse_model(to_string(m)), m);
  }
  EXPECT_EQ(parse_model("m3"), ModelId::M3);
  EXPECT_EQ(parse_model("4"), ModelId::M4);
  EXPECT_THROW(parse_model("M5"), std::invalid_argument);
}

TEST(ModelZoo, PackRoundTrip) {
  const Params p = m2_reference();
  const auto v = pack(ModelId::M2, p);
  ASSERT_EQ(v.size(), 6);
  EXPECT_EQ(unpack(ModelId::M2, v), p);
  EXPECT_THROW(unpack(ModelId::M1, v), std::invalid_argument);
}

TEST(ModelZoo, ValidateRejectsBadParams) {
  EXPECT_THROW(validate(ModelId::M0, Params{{0.1, 0.2}, 1, 1, 0}), std::invalid_argument);
  EXPECT_THROW(validate(ModelId::M0, Params{{0.1}, 0, 1, 0}), std::invalid_argument);
  EXPECT_THROW(validate(ModelId::M3, Params{{0.1, -0.1, -1.0}, 1, 1, 0}), std::invalid_argument);
  EXPECT_NO_THROW(validate(ModelId::M3, Params{{0.1, -0.1, 1.0}, 1, 1, 0}));
}

TEST(ModelZoo, TransitionMeanExamples) {
  EXPECT_DOUBLE_EQ(transition_mean(ModelId::M0, 0.0, Params{{0.15}, 1, 1, 0}), 0.15);

  const double log_k2 = std::log(std::pow(1.2, 10.0));
  EXPECT_NEAR(transition_mean(ModelId::M2, log_k2, m2_reference()), log_k2, 1e-12);

  const Params p4 = m4_reference();
  EXPECT_NEAR(transition_mean(ModelId::M4, std::log(20.0), p4), std::log(20.0), 1e-12);
  EXPECT_NEAR(transition_mean(ModelId::M4, 0.0, p4), 0.0, 1e-12);
}

TEST(ModelZoo, TransitionMeanOverflowIsDomainError) {
  const Params p{{0.1, 0.5}, 1, 1, 0};
  EXPECT_THROW(transition_mean(ModelId::M1, 701.0, p), std::domain_error);
  EXPECT_THROW(transition_mean(ModelId::M4, 700.0, m4_reference()), std::domain_error);  // e^1400
  EXPECT_THROW(transition_mean_derivative(ModelId::M4, 800.0, m4_reference()), std::domain_error);
  EXPECT_FALSE(std::isfinite(transition_mean_unchecked(ModelId::M1, 750.0, p)));
  try {
    transition_mean(ModelId::M1, 750.0, p);
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("M1"), std::string::npos);
  }
}

TEST(ModelZoo, DerivativeExamples) {
  Params p0{{0.3}, 1, 1, 0};
  for (double x : {-5.0, 0.0, 3.0}) EXPECT_EQ(transition_mean_derivative(ModelId::M0, x, p0), 1.0);

  const double log_k2 = std::log(std::pow(1.2, 10.0));
  EXPECT_NEAR(transition_mean_derivative(ModelId::M2, log_k2, m2_reference()),
              1.0 - 0.125 * 0.1 * 1.2, 1e-12);
  EXPECT_NEAR(transition_mean_derivative(ModelId::M4, 0.0, m4_reference()), 1.0475, 1e-12);
}

// Central differences at 1000 random (x, theta) per model.
TEST(ModelZoo, DerivativeMatchesFiniteDifference) {
  Rng rng(20240607);
  const Prior prior = default_prior(50);
  for (ModelId m : kAllModels) {
    for (int i = 0; i < 1000; ++i) {
      const Params p = prior_sample(m, prior, rng);
      const double x = -3.0 + 6.0 * rng.uniform();
      const double h = 1e-6 * std::max(1.0, std::abs(x));
      const double fd = (transition_mean(m, x + h, p) - transition_mean(m, x - h, p)) / (2.0 * h);
      const double d = transition_mean_derivative(m, x, p);
      ASSERT_NEAR(fd, d, 1e-6 * std::max(1.0, std::abs(d)))
          << to_string(m) << " x=" << x << " draw " << i;
    }
  }
}

TEST(ModelZoo, NestedModelsAgree) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const double b0 = rng.normal(), b1 = rng.normal();
    const double x = -3.0 + 6.0 * rng.uniform();
    const double m1 = transition_mean(ModelId::M1, x, Params{{b0, b1}, 1, 1, 0});
    EXPECT_NEAR(transition_mean(ModelId::M4, x, Params{{b0, b1, 0.0}, 1, 1, 0}), m1, 1e-12);
    EXPECT_NEAR(transition_mean(ModelId::M2, x, Params{{b0, b1, 1.0}, 1, 1, 0}), m1, 1e-12);
    EXPECT_NEAR(transition_mean(ModelId::M3, x, Params{{b0, b1, 1e-30}, 1, 1, 0}), m1, 1e-12);
    EXPECT_NEAR(transition_mean(ModelId::M1, x, Params{{b0, 0.0}, 1, 1, 0}),
                transition_mean(ModelId::M0, x, Params{{b0}, 1, 1, 0}), 1e-12);
  }
}

TEST(ModelZoo, TransitionLogpdfExamples) {
  EXPECT_NEAR(transition_logpdf(ModelId::M0, 0.0, 0.15, Params{{0.15}, 1.0, 1.0, 0}), -0.91894, 1e-5);
  const double q = 0.3;
  const Params p{{0.2}, q, 1.0, 0};
  const double mean = 0.2;
  const double at_sigma = -0.5 * std::log(2.0 * std::numbers::pi * q) - 0.5;
  EXPECT_NEAR(transition_logpdf(ModelId::M0, 0.0, mean + std::sqrt(q), p), at_sigma, 1e-12);
  EXPECT_NEAR(transition_logpdf(ModelId::M0, 0.0, mean - std::sqrt(q), p), at_sigma, 1e-12);

  const Params p1{{0.15, -0.05}, 0.25, 1.0, 0};
  EXPECT_NEAR(transition_mean(ModelId::M1, 0.0, p1), 0.10, 1e-15);
  EXPECT_NEAR(transition_logpdf(ModelId::M1, 0.0, 0.10, p1),
              -0.5 * std::log(2.0 * std::numbers::pi * 0.25), 1e-12);
}

TEST(ModelZoo, ObservationLogpdfExamples) {
  EXPECT_NEAR(observation_logpdf(1.3, 1.3, 1.0), -kHalfLog2Pi, 1e-12);
  EXPECT_NEAR(observation_logpdf(1.3 + 0.5, 1.3, 0.25), -kHalfLog2Pi - std::log(0.5) - 0.5, 1e-12);
  EXPECT_NEAR(observation_logpdf(2.0, 2.0, 2.0), observation_logpdf(2.0, 2.0, 1.0) - 0.5 * std::log(2.0),
              1e-12);
}

TEST(ModelZoo, DefaultPriorHyperparameters) {
  const Prior p = default_prior(50);
  EXPECT_DOUBLE_EQ(p.ig_alpha, 25.0);
  EXPECT_DOUBLE_EQ(p.ig_beta, 4.8);
  EXPECT_NEAR(p.ig_beta / (p.ig_alpha - 1.0), 0.2, 1e-15);
  EXPECT_THROW(default_prior(2), std::invalid_argument);
}

TEST(ModelZoo, PriorLogpdfSupportAndComponents) {
  const Prior prior = default_prior(50);
  EXPECT_EQ(prior_logpdf(ModelId::M3, Params{{0.1, -0.1, -1.0}, 0.2, 0.2, 0}, prior),
            -std::numeric_limits<double>::infinity());
  EXPECT_EQ(prior_logpdf(ModelId::M0, Params{{0.1}, -0.2, 0.2, 0}, prior),
            -std::numeric_limits<double>::infinity());
  for (ModelId m : kAllModels) {
    for (std::size_t k = 0; k < coefficient_count(m); ++k) {
      if (m == ModelId::M3 && k == 2) continue;
      EXPECT_NEAR(prior_coordinate_logpdf(m, k, 0.0, prior), -0.91894, 1e-5);
    }
  }
  // Independent inverse-gamma density at its mode beta / (alpha + 1).
  const double a = prior.ig_alpha, b = prior.ig_beta, mode = b / (a + 1.0);
  const double ig = a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(mode) - b / mode;
  const Params p{{0.0}, mode, mode, 0.0};
  EXPECT_NEAR(prior_logpdf(ModelId::M0, p, prior), 2.0 * ig + 2.0 * (-kHalfLog2Pi), 1e-10);
  // Gamma(1, 10) at b4 = 2 is exp(-0.2) / 10.
  EXPECT_NEAR(prior_coordinate_logpdf(ModelId::M3, 2, 2.0, prior), -0.2 - std::log(10.0), 1e-12);
}

TEST(ModelZoo, PriorSamplesAreInSupportAndMatchMoments) {
  Rng rng(99);
  const Prior prior = default_prior(50);
  double sum_s = 0.0, sum_b4 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const Params p = prior_sample(ModelId::M3, prior, rng);
    ASSERT_TRUE(std::isfinite(prior_logpdf(ModelId::M3, p, prior)));
    sum_s += p.sigma_eps2;
    sum_b4 += p.b[2];
  }
  EXPECT_NEAR(sum_s / n, 0.2, 0.002);    // IG mean; sd of the estimate ~3e-4
  EXPECT_NEAR(sum_b4 / n, 10.0, 0.25);   // Gamma(1, 10) mean; sd of the estimate ~0.07
  for (ModelId m : kAllModels) {
    for (int i = 0; i < 500; ++i) {
      ASSERT_TRUE(std::isfinite(prior_logpdf(m, prior_sample(m, 50, rng), 50)));
    }
  }
}

TEST(ModelZoo, PriorSampleIsDeterministic) {
  Rng a(3), b(3);
  EXPECT_EQ(prior_sample(ModelId::M4, 50, a), prior_sample(ModelId::M4, 50, b));
}

TEST(ModelZoo, EquilibriaExamples) {
  const Equilibria e1 = equilibria(ModelId::M1, Params{{0.15, -0.05}, 1, 1, 0});
  ASSERT_TRUE(e1.carrying_capacity);
  EXPECT_NEAR(*e1.carrying_capacity, 3.0, 1e-12);
  EXPECT_EQ(e1.classification, EquilibriumClass::StableK);

  const Equilibria e4 = equilibria(ModelId::M4, m4_reference());
  ASSERT_TRUE(e4.carrying_capacity && e4.allee_threshold);
  EXPECT_NEAR(*e4.carrying_capacity, 20.0, 1e-10);
  EXPECT_NEAR(*e4.allee_threshold, 1.0, 1e-10);
  EXPECT_EQ(e4.classification, EquilibriumClass::StrongAllee);

  const Equilibria e2 = equilibria(ModelId::M2, m2_reference());
  ASSERT_TRUE(e2.carrying_capacity);
  EXPECT_NEAR(*e2.carrying_capacity, std::pow(1.2, 10.0), 1e-9);
  EXPECT_NEAR(*e2.carrying_capacity, 6.1917, 1e-4);

  // Complex roots under M4.
  const Equilibria none = equilibria(ModelId::M4, Params{{-1.0, 0.01, -0.01}, 1, 1, 0});
  EXPECT_EQ(none.classification, EquilibriumClass::NoPositiveEquilibrium);
  EXPECT_FALSE(none.carrying_capacity);
  EXPECT_FALSE(none.allee_threshold);

  // Positive constant term: C < 0, weak Allee.
  const Equilibria weak = equilibria(ModelId::M4, Params{{0.05, 0.01, -0.0025}, 1, 1, 0});
  EXPECT_EQ(weak.classification, EquilibriumClass::WeakAllee);
  ASSERT_TRUE(weak.allee_threshold);
  EXPECT_LT(*weak.allee_threshold, 0.0);
}

TEST(ModelZoo, EquilibriaAreFixedPoints) {
  Rng rng(17);
  const Prior prior = default_prior(50);
  int checked = 0;
  for (ModelId m : {ModelId::M1, ModelId::M2, ModelId::M3, ModelId::M4}) {
    for (int i = 0; i < 2000; ++i) {
      Params p = prior_sample(m, prior, rng);
      // Shrink the density terms so some equilibria land in a sane range.
      if (m == ModelId::M4) p.b[2] *= 0.01;
      const Equilibria e = equilibria(m, p);
      if (e.classification == EquilibriumClass::NoPositiveEquilibrium) continue;
      ASSERT_TRUE(e.carrying_capacity);
      const double lk = std::log(*e.carrying_capacity);
      if (std::abs(lk) > 30.0) continue;
      ASSERT_NEAR(transition_mean(m, lk, p), lk, 1e-10 * std::max(1.0, std::abs(lk)))
          << to_string(m) << " draw " << i;
      if (e.classification == EquilibriumClass::StrongAllee) {
        const double lc = std::log(*e.allee_threshold);
        EXPECT_LT(*e.allee_threshold, *e.carrying_capacity);
        ASSERT_NEAR(transition_mean(m, lc, p), lc, 1e-10 * std::max(1.0, std::abs(lc)));
      }
      ++checked;
    }
  }
  EXPECT_GT(checked, 500);
}
