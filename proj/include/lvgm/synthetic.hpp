#pragma once

#include <cstdint>

#include "lvgm/decomposition.hpp"

namespace lvgm {

class ConstructionFailed : public Error {
 public:
  using Error::Error;
};

/// Planted sparse plus low-rank model and its covariance.
struct GroundTruth {
  SymMatrix S0;
  SymMatrix L0;
  /// (S0 − L0)⁻¹.
  SymMatrix sigma_m;
  Support support0;
  int rank0 = 0;
  double density = 0.0;
  std::uint64_t seed = 0;
  /// Diagonal level a of S0 and spectral bound b of L0.
  double diag_level = 0.0;
  double lowrank_scale = 0.0;
};

struct GroundTruthOptions {
  /// Off-diagonal magnitudes of S0 are uniform on [lo, hi] with random sign.
  double offdiag_lo = 0.2;
  double offdiag_hi = 0.5;
  /// Largest eigenvalue of L0.
  double lowrank_scale = 1.0;
  /// Starting diagonal level a of S0.
  double diag_start = 3.0;
  /// Required smallest eigenvalue of S0 − L0.
  double min_eig = 0.1;
  int max_retries = 10;
};

/**
 * S0 = a·I + a symmetric pattern of ⌈density·m(m−1)/2⌉ off-diagonal entries,
 * L0 = F·Fᵀ with standard normal F (m×rank) rescaled to top eigenvalue b.
 * a starts at diag_start and grows until λ_min(S0 − L0) ≥ min_eig. All draws come
 * from `seed`.
 */
GroundTruth gen_ground_truth(Eigen::Index m, int rank, double density,
                             std::uint64_t seed,
                             const GroundTruthOptions& opts = {});

/// N zero-mean Gaussian rows with covariance gt.sigma_m.
Eigen::MatrixXd sample_data(const GroundTruth& gt, std::int64_t n,
                            std::uint64_t seed);

struct RecoveryMetrics {
  double support_f1 = 0.0;
  int false_pos = 0;
  int false_neg = 0;
  int rank_err = 0;
  double frob_err_X = 0.0;
};

RecoveryMetrics recovery_metrics(const Decomposition& est,
                                 const GroundTruth& gt);

}  // namespace lvgm
