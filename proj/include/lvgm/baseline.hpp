#pragma once

#include <vector>

#include "lvgm/decomposition.hpp"

namespace lvgm {

/// Parameters of the classical (non-robust) sparse plus low-rank fit.
struct ClassicSpec {
  double lambda_reg = 0.1;
  double gamma = 1.0;
  double rho = 1.0;
  int max_iters = 20000;
  double tol_primal = 1e-7;
  double tol_dual = 1e-7;

  void validate() const;
};

struct ClassicResult {
  Decomposition decomposition;
  int iterations = 0;
  bool converged = false;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  /// Objective at (R, S, L) after every iteration.
  std::vector<double> objective_history;
  /// Objective at the returned (S, L) with R = S − L.
  double objective = 0.0;
};

/// −log|S − L| + tr((S − L)Σ) + λ(γ·h₁(S) + tr(L)); +∞ when S − L is not
/// positive definite.
double classic_objective(const SymMatrix& sigma, const SymMatrix& s,
                         const SymMatrix& l, double lambda_reg, double gamma);

/**
 * Three-block ADMM on R = S − L:
 *   R ← log-det prox (spectral), S ← off-diagonal soft threshold at λγ/(2ρ),
 *   L ← PSD projection of the target shifted by −λ/ρ, Y ← Y + ρ(R − S + L).
 * Stops when ‖R − S + L‖ ≤ tol_primal and ρ‖Δ(S − L)‖ ≤ tol_dual. Throws
 * NotPositiveDefinite when Σ is not ≻ 0.
 */
ClassicResult solve_classic(const SymMatrix& sigma, const ClassicSpec& spec);

}  // namespace lvgm
