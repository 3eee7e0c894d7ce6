#pragma once

#include "lvgm/decomposition.hpp"
#include "lvgm/dual_solver.hpp"

namespace lvgm {

struct KktReport {
  /// |kl2(Σ̂, X⁻¹) − δ|.
  double kl_gap = 0.0;
  double primal_objective = 0.0;
  /// −J̃ at the dual point.
  double dual_objective = 0.0;
  double duality_gap = 0.0;
  /// tr(U*·L), signed.
  double comp_slack = 0.0;
  /// Largest γ/2 − |U*_ij| over the detected support (0 when empty).
  double support_margin = 0.0;
  /// Frobenius norm of the off-support, off-diagonal part of X* + L.
  double lowrank_residual = 0.0;
  /// ‖S − L − X*‖ / ‖X*‖ after zeroing.
  double reconstruction_error = 0.0;
  /// Smallest eigenvalue of S − L after zeroing.
  double min_eig_S_minus_L = 0.0;

  bool feasibility_violation = false;
  bool residual_warning = false;
  bool rank_deficient_ls = false;
};

struct RecoveryConfig {
  double support_rel_tol = 1e-4;
  double kernel_rel_tol = 1e-4;
  /// lowrank_residual above this fraction of ‖X*‖ raises residual_warning.
  double residual_warn = 1e-4;
  /// Relative reconstruction error above this is a feasibility violation.
  double reconstruction_tol = 1e-6;
  double rank_rel_tol = 1e-8;
};

/// X = (λ⁻¹ofd(U) + Σ̂)⁻¹, the primal minimizer for fixed multipliers.
SymMatrix primal_X(const DualPoint& p, const CovarianceEstimate& ce);

/// Pairs i < j with |U_ij| ≥ (γ/2)(1 − rel_tol).
Support detect_support(const SymMatrix& u_star, double gamma, double rel_tol);

/// Orthonormal basis (m×r) of the eigenspace of U* with eigenvalues at most
/// rel_tol·max eigenvalue.
Eigen::MatrixXd detect_kernel(const SymMatrix& u_star, double rel_tol);

struct LowRankFit {
  SymMatrix L;
  /// r×r coefficient matrix after PSD projection.
  Eigen::MatrixXd M;
  bool rank_deficient = false;
};

/**
 * L = V·M·Vᵀ with M chosen to cancel X* + L on the off-support off-diagonal
 * pairs in the least-squares sense, then projected onto M ⪰ 0. A singular
 * system falls back to the minimum-norm solution and sets rank_deficient.
 */
LowRankFit fit_L(const SymMatrix& x_star, const Eigen::MatrixXd& basis,
                 const Support& support);

struct Recovery {
  Decomposition decomposition;
  KktReport kkt;
};

/// Builds S from X* + L by zeroing off-support entries and fills the
/// diagnostics against the dual point that produced X*.
Recovery assemble(const DualPoint& p_star, const CovarianceEstimate& ce,
                  const ProblemSpec& spec, const SymMatrix& x_star,
                  const LowRankFit& fit, const Support& support,
                  const RecoveryConfig& cfg = {});

/// primal_X → detect_support → detect_kernel → fit_L → assemble.
Recovery recover(const DualPoint& p_star, const CovarianceEstimate& ce,
                 const ProblemSpec& spec, const RecoveryConfig& cfg = {});

}  // namespace lvgm
