#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lvgm/divergence.hpp"

namespace lvgm {

/// λ⁻¹ofd(U) + Σ̂ is not positive definite, or λ ≤ 0.
class InfeasiblePoint : public Error {
 public:
  using Error::Error;
};

/// Lagrange multipliers (λ, U) of the KL constraint and of S − X ⪰ 0.
struct DualPoint {
  double lambda = 1.0;
  SymMatrix U;

  /// The always-feasible start (λ = 1, U = I).
  static DualPoint initial(Eigen::Index dim) {
    return {1.0, SymMatrix::identity(dim)};
  }
};

/// Euclidean norm of (λ, U) with the trace inner product on U.
double point_norm(double lambda, const SymMatrix& u);

/// Largest violation of dd(U) = I, |U_ij| ≤ γ/2 and U ⪰ 0 (the last measured
/// as the negative part of the smallest eigenvalue).
double multiplier_set_violation(const SymMatrix& u, double gamma);

struct SolverConfig {
  double grad_tol = 1e-6;
  int max_iters = 5000;
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  int dykstra_iters = 500;
  double dykstra_tol = 1e-10;
  /// Lower clip for λ; inactive at the optimum, protects early iterates.
  double lambda_floor = 1e-10;
  /// Largest number of step halvings tried within one iteration.
  int max_backtracks = 60;

  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  double objective = 0.0;
  double pgrad_norm = 0.0;
  double step = 0.0;
  double lambda = 0.0;
};

enum class Termination { converged, max_iterations, line_search_failed };

std::string to_string(Termination t);

struct SolverTrace {
  std::vector<IterationRecord> records;
  Termination reason = Termination::max_iterations;
  /// Iterations in which project_U hit its iteration cap.
  int projection_failures = 0;

  bool converged() const { return reason == Termination::converged; }

  /// One JSON object per line: {iter, objective, pgrad_norm, step, lambda}.
  void write_jsonl(std::ostream& out) const;
};

struct DualSolution {
  DualPoint point;
  SolverTrace trace;
};

/// J̃ = −λ(log|λ⁻¹ofd(U) + Σ̂| − log|Σ̂| − δ), the negated dual function.
/// Throws InfeasiblePoint outside the open domain.
double dual_objective(const DualPoint& p, const CovarianceEstimate& ce,
                      const ProblemSpec& spec);

struct DualGradient {
  double lambda = 0.0;
  /// Zero diagonal; the diagonal of U is pinned to the identity.
  SymMatrix U;
};

/// Gradient of J̃ under ⟨A, B⟩ = tr(AᵀB); each mirrored off-diagonal entry
/// is its own coordinate.
DualGradient dual_gradient(const DualPoint& p, const CovarianceEstimate& ce,
                           const ProblemSpec& spec);

/**
 * Dense Hessian of J̃ in the coordinates (λ, vec(ofd(U))), size (1+m²).
 *
 * With X = (λ⁻¹ofd(U) + Σ̂)⁻¹, K = X ⊗ X and ũ = vec(ofd(U)):
 * H = [[λ⁻³ũᵀKũ, −λ⁻²ũᵀK], [−λ⁻²Kũ, λ⁻¹K]].
 * H is positive semidefinite and annihilates (λ, ũ). Intended for
 * diagnostics only; refuses m > 40.
 */
Eigen::MatrixXd dual_hessian(const DualPoint& p, const CovarianceEstimate& ce,
                             const ProblemSpec& spec);

struct ProjectionResult {
  SymMatrix U;
  int iterations = 0;
  bool converged = false;
};

/**
 * Frobenius projection onto {U ⪰ 0, dd(U) = I, |U_ij| ≤ γ/2} by Dykstra's
 * alternating projections between the box-with-unit-diagonal set and the PSD
 * cone. The PSD-side iterate is returned after a final repair (congruence to
 * unit diagonal, then shrinking towards I) that makes it an exact member of
 * 𝒰. When the iteration cap is hit the last iterate is returned with
 * converged == false.
 */
ProjectionResult project_U(const SymMatrix& u_raw, double gamma,
                           const SolverConfig& cfg);

/**
 * Minimizes J̃ by projected gradient descent with Armijo backtracking.
 *
 * Trial points are (max(λ − s·g_λ, λ_floor), project_U(U − s·g_U)) for
 * s = 1, β, β², …; a trial is accepted once λ⁻¹ofd(U) + Σ̂ ≻ 0 and the Armijo
 * condition holds along the projection arc. When no step is accepted the
 * iteration is retried with dykstra_tol tightened 100-fold, down to 1e-14,
 * before stopping with line_search_failed. Throws InfeasibleSpec when
 * δ ≥ δ_max and InfeasiblePoint when `start` lies outside the domain.
 */
DualSolution solve_dual(const CovarianceEstimate& ce, const ProblemSpec& spec,
                        const SolverConfig& cfg = {},
                        const std::optional<DualPoint>& start = std::nullopt);

}  // namespace lvgm
