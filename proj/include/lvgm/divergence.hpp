#pragma once

#include <cstdint>

#include "lvgm/symcore.hpp"

namespace lvgm {

/// δ is not below δ_max, or Σ̂ is diagonal so no admissible δ exists.
class InfeasibleSpec : public Error {
 public:
  using Error::Error;
};

/// Sample covariance Σ̂ together with the number of samples N behind it.
class CovarianceEstimate {
 public:
  /// Validates Σ̂ ≻ 0 (throws NotPositiveDefinite) and N ≥ 2.
  CovarianceEstimate(SymMatrix sigma_hat, std::int64_t n_samples);

  const SymMatrix& sigma_hat() const { return sigma_hat_; }
  std::int64_t n_samples() const { return n_samples_; }
  Eigen::Index dim() const { return sigma_hat_.dim(); }
  double logdet() const { return logdet_; }

 private:
  SymMatrix sigma_hat_;
  std::int64_t n_samples_;
  double logdet_;
};

/// Balance γ and KL budget δ of the robust problem.
class ProblemSpec {
 public:
  ProblemSpec(double gamma, double delta);

  /// Also checks δ < δ_max(Σ̂); throws InfeasibleSpec otherwise, including
  /// the degenerate diagonal case δ_max == 0.
  ProblemSpec(double gamma, double delta, const CovarianceEstimate& ce);

  double gamma() const { return gamma_; }
  double delta() const { return delta_; }

 private:
  double gamma_;
  double delta_;
};

/// Doubled divergence 2·D_KL(Σ̂‖Σ) = log|Σ| − log|Σ̂| + tr(Σ⁻¹Σ̂) − m.
double kl2(const SymMatrix& sigma_hat, const SymMatrix& sigma);

/// 2·D_KL(Σ̂‖X⁻¹) = −log|X| − log|Σ̂| + tr(XΣ̂) − m, without inverting X.
double kl2_of_X(const SymMatrix& sigma_hat, const SymMatrix& x);

/// log|dd(Σ̂)| − log|Σ̂|, the smallest doubled divergence reachable by a
/// diagonal covariance (attained at dd(Σ̂)).
double delta_max(const SymMatrix& sigma_hat);

/// Gaussian negative log-likelihood (N/2)[log|Σ| + tr(Σ̂Σ⁻¹) + m·log 2π].
double nll(const SymMatrix& sigma_hat, std::int64_t n_samples,
           const SymMatrix& sigma);

/// Likelihood bound l̄ equivalent to the KL budget δ.
double delta_to_nll_bound(const CovarianceEstimate& ce, double delta);

}  // namespace lvgm
