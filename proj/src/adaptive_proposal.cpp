#include "adpmcmc/adaptive_proposal.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace adpmcmc {
namespace {

// log N(v; 0, scale * Sigma) using a Cholesky factor of scale * Sigma.
double gaussian_logpdf(const Eigen::VectorXd& v, const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd z = llt.matrixL().solve(v);
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const auto d = static_cast<double>(v.size());
  return -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det + z.squaredNorm());
}

double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double fixed_sd(const AdaptState& s) {
  return std::sqrt(s.scale_fixed * s.fixed_scale_multiplier);
}

}  // namespace

Eigen::MatrixXd AdaptState::covariance() const {
  const auto d = static_cast<Eigen::Index>(dim);
  if (n < 2) return Eigen::MatrixXd::Zero(d, d);
  return scatter / static_cast<double>(n - 1);
}

AdaptState make_adapt_state(std::size_t dim, double w1, double fixed_scale_multiplier) {
  if (dim == 0) throw std::invalid_argument("adaptive proposal needs dimension >= 1");
  if (!(w1 >= 0.0 && w1 <= 1.0)) throw std::invalid_argument("w1 must lie in [0, 1]");
  AdaptState s;
  s.dim = dim;
  const auto d = static_cast<Eigen::Index>(dim);
  s.mean = Eigen::VectorXd::Zero(d);
  s.scatter = Eigen::MatrixXd::Zero(d, d);
  s.w1 = w1;
  s.scale_adaptive = 2.38 * 2.38 / static_cast<double>(dim);
  s.scale_fixed = 0.1 * 0.1 / static_cast<double>(dim);
  s.fixed_scale_multiplier = fixed_scale_multiplier;
  return s;
}

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw std::invalid_argument("symmetric_sqrt: need a non-empty square matrix");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0)) {
    throw std::invalid_argument("symmetric_sqrt: matrix is not positive definite");
  }
  return eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

void absorb(AdaptState& s, const Eigen::Ref<const Eigen::VectorXd>& theta) {
  if (static_cast<std::size_t>(theta.size()) != s.dim) {
    throw std::invalid_argument("update_covariance: dimension mismatch");
  }
  ++s.n;
  const Eigen::VectorXd delta = theta - s.mean;
  s.mean += delta / static_cast<double>(s.n);
  s.scatter.noalias() += delta * (theta - s.mean).transpose();
  // Keep the scatter exactly symmetric against rounding.
  s.scatter = 0.5 * (s.scatter + s.scatter.transpose()).eval();
}

AdaptState update_covariance(AdaptState s, const Eigen::Ref<const Eigen::VectorXd>& theta) {
  absorb(s, theta);
  return s;
}

bool adaptive_factor(const AdaptState& s, Eigen::MatrixXd& factor) {
  Eigen::MatrixXd cov = s.scale_adaptive * s.covariance();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) return false;
  if (!(eig.eigenvalues().minCoeff() > 0.0)) {
    const double jitter = 1e-10 * cov.trace() / static_cast<double>(s.dim);
    if (!(jitter > 0.0)) return false;
    cov.diagonal().array() += jitter;
    eig.compute(cov);
    if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0)) return false;
  }
  factor = eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().asDiagonal() *
           eig.eigenvectors().transpose();
  return true;
}

Proposal propose_with(const AdaptState& s, const Eigen::Ref<const Eigen::VectorXd>& theta,
                      bool adaptive_branch, const Eigen::Ref<const Eigen::VectorXd>& z) {
  if (static_cast<std::size_t>(theta.size()) != s.dim ||
      static_cast<std::size_t>(z.size()) != s.dim) {
    throw std::invalid_argument("propose: dimension mismatch");
  }
  Proposal out;
  if (adaptive_branch) {
    Eigen::MatrixXd factor;
    if (adaptive_factor(s, factor)) {
      out.theta = theta + factor * z;
      out.branch = ProposalBranch::Adaptive;
      return out;
    }
    out.branch = ProposalBranch::FixedFallback;
  } else {
    out.branch = ProposalBranch::Fixed;
  }
  if (s.fixed_factor.size() == 0) {
    out.theta = theta + fixed_sd(s) * z;
  } else {
    out.theta = theta + fixed_sd(s) * (s.fixed_factor * z);
  }
  return out;
}

Proposal propose(const AdaptState& s, const Eigen::Ref<const Eigen::VectorXd>& theta, Rng& rng) {
  const double u = rng.uniform();
  Eigen::VectorXd z(static_cast<Eigen::Index>(s.dim));
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  const bool adaptive = s.adaptive_selectable() && u < s.w1;
  return propose_with(s, theta, adaptive, z);
}

double proposal_logpdf(const AdaptState& s, const Eigen::Ref<const Eigen::VectorXd>& from,
                       const Eigen::Ref<const Eigen::VectorXd>& to) {
  const Eigen::VectorXd v = to - from;
  const auto d = static_cast<Eigen::Index>(s.dim);
  const Eigen::MatrixXd fixed_cov =
      (s.fixed_factor.size() == 0 ? Eigen::MatrixXd::Identity(d, d)
                                  : Eigen::MatrixXd(s.fixed_factor * s.fixed_factor)) *
      (s.scale_fixed * s.fixed_scale_multiplier);
  const double log_fixed = gaussian_logpdf(v, fixed_cov);
  if (!s.adaptive_selectable() || s.w1 == 0.0) return log_fixed;
  Eigen::MatrixXd factor;
  if (!adaptive_factor(s, factor)) return log_fixed;
  const double log_adaptive = gaussian_logpdf(v, factor * factor);
  if (s.w1 == 1.0) return log_adaptive;
  return log_add(std::log(s.w1) + log_adaptive, std::log1p(-s.w1) + log_fixed);
}

}  // namespace adpmcmc
