#pragma once

#include <cstdint>
#include <optional>

#include "lvgm/baseline.hpp"
#include "lvgm/calibration.hpp"
#include "lvgm/recovery.hpp"
#include "lvgm/synthetic.hpp"

namespace lvgm {

/// Reference configuration of the sparse-plus-latent comparison: m = 20,
/// rank 4, density 0.1, N = 1000. The regularization values were picked by
/// grid search on seeds 200–209, disjoint from the default evaluation seeds.
struct ExperimentDefaults {
  static constexpr Eigen::Index m = 20;
  static constexpr int rank = 4;
  static constexpr double density = 0.1;
  static constexpr std::int64_t n_samples = 1000;
  static constexpr double classic_lambda = 0.0234;
  static constexpr double classic_gamma = 0.75;
  static constexpr double robust_gamma = 0.7;
  static constexpr double alpha = 0.95;
  static constexpr std::int64_t replicates = 1000;
  static constexpr double grad_tol = 1e-7;
};

struct CompareOptions {
  ClassicSpec classic;
  double robust_gamma = ExperimentDefaults::robust_gamma;
  double alpha = ExperimentDefaults::alpha;
  std::int64_t replicates = ExperimentDefaults::replicates;
  std::uint64_t calibration_seed = 1;
  SolverConfig solver;
  RecoveryConfig recovery;

  CompareOptions();
};

/// The three fits of the comparison and their recovery metrics.
struct CompareResult {
  ClassicResult classic_true;
  RecoveryMetrics classic_true_metrics;
  ClassicResult classic_hat;
  RecoveryMetrics classic_hat_metrics;
  CalibrationReport calibration;
  /// Empty when the calibrated δ is not below δ_max.
  std::optional<DualSolution> dual;
  std::optional<Recovery> robust;
  std::optional<RecoveryMetrics> robust_metrics;
};

/// Classical fit on the true Σ_m, classical fit on Σ̂, and the robust fit on
/// Σ̂ with δ calibrated at level `alpha`.
CompareResult run_compare(const GroundTruth& gt, const CovarianceEstimate& ce,
                          const CompareOptions& opts);

}  // namespace lvgm
