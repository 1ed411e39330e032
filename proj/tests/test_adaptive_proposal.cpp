#include <gtest/gtest.h>

#include <Eigen/LU>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "adpmcmc/adaptive_proposal.hpp"

using namespace adpmcmc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

MatrixXd batch_covariance(const std::vector<VectorXd>& xs) {
  const auto d = xs.front().size();
  VectorXd mean = VectorXd::Zero(d);
  for (const auto& x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  MatrixXd c = MatrixXd::Zero(d, d);
  for (const auto& x : xs) c += (x - mean) * (x - mean).transpose();
  return c / static_cast<double>(xs.size() - 1);
}

AdaptState seeded_state(std::size_t d, std::uint64_t seed, std::size_t n) {
  AdaptState s = make_adapt_state(d);
  Rng rng(seed);
  MatrixXd mix = MatrixXd::Random(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    VectorXd z(static_cast<Eigen::Index>(d));
    for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = rng.normal();
    absorb(s, mix * z);
  }
  s.adaptation_enabled = true;
  return s;
}

}  // namespace

TEST(UpdateCovariance, Examples) {
  AdaptState s = make_adapt_state(2);
  s = update_covariance(s, vec({1.5, -2.0}));
  s = update_covariance(s, vec({1.5, -2.0}));
  EXPECT_TRUE(s.covariance().isZero(0.0));

  AdaptState s1 = make_adapt_state(1);
  s1 = update_covariance(s1, vec({0.0}));
  s1 = update_covariance(s1, vec({2.0}));
  EXPECT_NEAR(s1.covariance()(0, 0), 2.0, 1e-15);

  AdaptState s2 = make_adapt_state(2);
  for (const auto& v : {vec({0, 0}), vec({1, 0}), vec({0, 1})}) s2 = update_covariance(s2, v);
  MatrixXd expect(2, 2);
  expect << 1.0 / 3, -1.0 / 6, -1.0 / 6, 1.0 / 3;
  EXPECT_TRUE(s2.covariance().isApprox(expect, 1e-14));
}

TEST(UpdateCovariance, MatchesBatchOnRandomSequences) {
  Rng rng(31);
  for (std::size_t d : {1u, 3u, 5u}) {
    AdaptState s = make_adapt_state(d);
    std::vector<VectorXd> xs;
    for (int n = 0; n < 1000; ++n) {
      VectorXd x(static_cast<Eigen::Index>(d));
      for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = 10.0 + rng.normal() * (k + 1);
      xs.push_back(x);
      absorb(s, x);
      if (xs.size() >= 2 && (n % 97 == 0 || n == 999)) {
        const MatrixXd diff = s.covariance() - batch_covariance(xs);
        ASSERT_LT(diff.cwiseAbs().maxCoeff(), 1e-10) << "d=" << d << " n=" << n;
      }
    }
  }
}

TEST(Propose, ZeroDrawReturnsCurrent) {
  const AdaptState s = seeded_state(3, 1, 50);
  const VectorXd theta = vec({0.3, -1.0, 2.0});
  const VectorXd z = VectorXd::Zero(3);
  EXPECT_TRUE(propose_with(s, theta, true, z).theta.isApprox(theta, 0.0));
  EXPECT_TRUE(propose_with(s, theta, false, z).theta.isApprox(theta, 0.0));
}

TEST(Propose, AdaptiveScaleInOneDimension) {
  AdaptState s = make_adapt_state(1);
  // Unit sample variance: {-1, 0, 1} has variance 1.
  for (double v : {-1.0, 0.0, 1.0}) absorb(s, vec({v}));
  s.adaptation_enabled = true;
  ASSERT_NEAR(s.covariance()(0, 0), 1.0, 1e-15);
  const Proposal p = propose_with(s, vec({0.5}), true, vec({0.7}));
  EXPECT_EQ(p.branch, ProposalBranch::Adaptive);
  EXPECT_NEAR(p.theta[0], 0.5 + 2.38 * 0.7, 1e-12);
}

TEST(Propose, FixedScaleInFourDimensions) {
  const AdaptState s = make_adapt_state(4);
  const VectorXd z = vec({1.0, -2.0, 0.5, 3.0});
  const Proposal p = propose_with(s, VectorXd::Zero(4), false, z);
  EXPECT_EQ(p.branch, ProposalBranch::Fixed);
  EXPECT_TRUE(p.theta.isApprox(0.05 * z, 1e-14));
}

TEST(Propose, SingularCovarianceFallsBackToFixed) {
  AdaptState s = make_adapt_state(2);
  for (int i = 0; i < 10; ++i) absorb(s, vec({1.0, 2.0}));
  s.adaptation_enabled = true;
  const VectorXd z = vec({1.0, 1.0});
  const Proposal p = propose_with(s, VectorXd::Zero(2), true, z);
  EXPECT_EQ(p.branch, ProposalBranch::FixedFallback);
  EXPECT_TRUE(p.theta.isApprox(std::sqrt(0.01 / 2) * z, 1e-14));
}

TEST(Propose, AdaptiveBranchNeedsEnoughSamples) {
  AdaptState s = make_adapt_state(2);
  s.adaptation_enabled = true;
  Rng rng(1);
  for (int i = 0; i < 4; ++i) absorb(s, vec({rng.normal(), rng.normal()}));
  EXPECT_FALSE(s.adaptive_selectable());  // needs 2d + 1 = 5
  for (int i = 0; i < 200; ++i) EXPECT_NE(propose(s, VectorXd::Zero(2), rng).branch, ProposalBranch::Adaptive);
  absorb(s, vec({rng.normal(), rng.normal()}));
  EXPECT_TRUE(s.adaptive_selectable());
}

TEST(Propose, BranchFrequencyMatchesW1) {
  AdaptState s = seeded_state(2, 5, 100);
  s.w1 = 0.7;
  Rng rng(3);
  int adaptive = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) adaptive += propose(s, VectorXd::Zero(2), rng).branch == ProposalBranch::Adaptive;
  EXPECT_NEAR(adaptive / double(n), 0.7, 4.0 * std::sqrt(0.21 / n));
}

TEST(Propose, MixtureIsSymmetric) {
  Rng rng(8);
  const AdaptState s = seeded_state(4, 2, 40);
  for (int i = 0; i < 500; ++i) {
    VectorXd a(4), b(4);
    for (Eigen::Index k = 0; k < 4; ++k) {
      a[k] = rng.normal();
      b[k] = a[k] + 0.3 * rng.normal();
    }
    ASSERT_NEAR(proposal_logpdf(s, a, b), proposal_logpdf(s, b, a), 1e-10);
  }
}

TEST(Propose, ZeroW1IgnoresHistory) {
  AdaptState a = seeded_state(3, 4, 100);
  AdaptState b = make_adapt_state(3);
  a.w1 = 0.0;
  b.w1 = 0.0;
  b.adaptation_enabled = true;
  Rng ra(6), rb(6);
  for (int i = 0; i < 50; ++i) {
    const Proposal pa = propose(a, VectorXd::Zero(3), ra);
    const Proposal pb = propose(b, VectorXd::Zero(3), rb);
    ASSERT_TRUE(pa.theta.isApprox(pb.theta, 0.0));
    ASSERT_EQ(pa.branch, ProposalBranch::Fixed);
  }
}

// Empirical covariance of the adaptive component equals 2.38^2/d * Sigma.
TEST(Propose, AdaptiveComponentCovariance) {
  AdaptState s = seeded_state(2, 9, 500);
  s.w1 = 1.0;
  Rng rng(10);
  std::vector<VectorXd> draws;
  for (int i = 0; i < 40000; ++i) draws.push_back(propose(s, VectorXd::Zero(2), rng).theta);
  const MatrixXd expect = (2.38 * 2.38 / 2.0) * s.covariance();
  const MatrixXd got = batch_covariance(draws);
  EXPECT_LT((got - expect).cwiseAbs().maxCoeff(), 0.05 * expect.cwiseAbs().maxCoeff());
}

TEST(SymmetricSqrt, SquaresBackAndRejectsIndefinite) {
  MatrixXd c(2, 2);
  c << 4.0, 1.0, 1.0, 0.5;
  const MatrixXd r = symmetric_sqrt(c);
  EXPECT_TRUE((r * r).isApprox(c, 1e-12));
  EXPECT_TRUE(r.isApprox(r.transpose(), 1e-14));
  MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(symmetric_sqrt(bad), std::invalid_argument);
}

// Preconditioned fixed component: covariance (0.1^2/d) m C, density to match.
TEST(Propose, PreconditionedFixedComponent) {
  AdaptState s = make_adapt_state(2, 0.0, 4.0);
  MatrixXd c(2, 2);
  c << 1e-4, -2e-5, -2e-5, 9.0;
  s.fixed_factor = symmetric_sqrt(c);
  Rng rng(12);
  std::vector<VectorXd> draws;
  for (int i = 0; i < 40000; ++i) draws.push_back(propose(s, VectorXd::Zero(2), rng).theta);
  const MatrixXd expect = (0.01 / 2.0) * 4.0 * c;
  const MatrixXd got = batch_covariance(draws);
  for (Eigen::Index i = 0; i < 2; ++i) {
    EXPECT_NEAR(got(i, i) / expect(i, i), 1.0, 0.03);
  }
  EXPECT_NEAR(got(0, 1) / std::sqrt(got(0, 0) * got(1, 1)), -2e-5 / std::sqrt(9e-4), 0.03);

  const VectorXd from = vec({0.1, -1.0}), to = vec({0.11, 0.2});
  const VectorXd r = to - from;
  const double exact = -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(expect.determinant()) -
                       0.5 * r.dot(expect.inverse() * r);
  EXPECT_NEAR(proposal_logpdf(s, from, to), exact, 1e-9);
}
