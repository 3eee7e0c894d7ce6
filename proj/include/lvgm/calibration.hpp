#pragma once

#include <cstdint>
#include <vector>

#include "lvgm/divergence.hpp"

namespace lvgm {

/// The sample covariance is not positive definite (e.g. N < m).
class SingularCovariance : public Error {
 public:
  using Error::Error;
};

class NonFiniteData : public Error {
 public:
  using Error::Error;
};

/// Zero-mean sample covariance N⁻¹ Σ x xᵀ of an N×m data table.
CovarianceEstimate sample_covariance(const Eigen::MatrixXd& data);

struct CalibrationReport {
  double alpha = 0.0;
  double delta_alpha = 0.0;
  std::int64_t replicates = 0;
  std::uint64_t seed = 0;
  double delta_max = 0.0;
  bool exceeded_delta_max = false;
  /// Replicates whose sample covariance was singular and were redrawn.
  std::int64_t discarded = 0;
  /// Ascending divergences kl2(Σ̂⁽ᵏ⁾, Σ̂), one per replicate.
  std::vector<double> divergences;

  /// Nearest-rank quantile of `divergences`.
  double quantile(double a) const;
};

/// Nearest-rank empirical quantile: element ⌈a·M⌉ (1-based) of the sorted
/// sample.
double nearest_rank_quantile(const std::vector<double>& sorted, double a);

/**
 * Parametric-bootstrap estimate of δ_α.
 *
 * Each replicate k draws N vectors from N(0, Σ̂) using the stream keyed by
 * (seed, k, attempt), forms their sample covariance Σ̂⁽ᵏ⁾ and records
 * kl2(Σ̂⁽ᵏ⁾, Σ̂). Singular replicates are redrawn; more than 1% redraws is an
 * error. The result does not depend on `workers`.
 */
CalibrationReport calibrate_delta(const CovarianceEstimate& ce, double alpha,
                                  std::int64_t replicates, std::uint64_t seed,
                                  unsigned workers = 0);

}  // namespace lvgm
