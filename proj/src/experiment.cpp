#include "lvgm/experiment.hpp"

namespace lvgm {

CompareOptions::CompareOptions() {
  classic.lambda_reg = ExperimentDefaults::classic_lambda;
  classic.gamma = ExperimentDefaults::classic_gamma;
  solver.grad_tol = ExperimentDefaults::grad_tol;
}

CompareResult run_compare(const GroundTruth& gt, const CovarianceEstimate& ce,
                          const CompareOptions& opts) {
  if (ce.dim() != gt.sigma_m.dim()) {
    throw DimensionMismatch("samples and ground truth differ in m");
  }
  CompareResult r;
  r.classic_true = solve_classic(gt.sigma_m, opts.classic);
  r.classic_true_metrics = recovery_metrics(r.classic_true.decomposition, gt);
  r.classic_hat = solve_classic(ce.sigma_hat(), opts.classic);
  r.classic_hat_metrics = recovery_metrics(r.classic_hat.decomposition, gt);

  r.calibration = calibrate_delta(ce, opts.alpha, opts.replicates,
                                  opts.calibration_seed);
  if (r.calibration.exceeded_delta_max) return r;

  const ProblemSpec spec(opts.robust_gamma, r.calibration.delta_alpha, ce);
  r.dual = solve_dual(ce, spec, opts.solver);
  r.robust = recover(r.dual->point, ce, spec, opts.recovery);
  r.robust_metrics = recovery_metrics(r.robust->decomposition, gt);
  return r;
}

}  // namespace lvgm
