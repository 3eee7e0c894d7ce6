#include "lvgm/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/QR>

namespace lvgm {

SymMatrix primal_X(const DualPoint& p, const CovarianceEstimate& ce) {
  if (!(p.lambda > 0.0)) throw InfeasiblePoint("lambda must be positive");
  const SymMatrix w = ofd(p.U) * (1.0 / p.lambda) + ce.sigma_hat();
  try {
    return inverse_spd(w);
  } catch (const NotPositiveDefinite&) {
    throw InfeasiblePoint(
        "lambda^-1 ofd(U) + sigma_hat is not positive definite");
  }
}

Support detect_support(const SymMatrix& u_star, double gamma, double rel_tol) {
  const double level = 0.5 * gamma * (1.0 - rel_tol);
  Support s;
  for (Eigen::Index i = 0; i < u_star.dim(); ++i) {
    for (Eigen::Index j = i + 1; j < u_star.dim(); ++j) {
      if (std::abs(u_star(i, j)) >= level) s.emplace(i, j);
    }
  }
  return s;
}

Eigen::MatrixXd detect_kernel(const SymMatrix& u_star, double rel_tol) {
  const auto es = eig_sym(u_star);
  const Eigen::Index m = u_star.dim();
  if (m == 0) return Eigen::MatrixXd(0, 0);
  const double level = rel_tol * std::max(es.values(m - 1), 0.0);
  Eigen::Index r = 0;
  while (r < m && es.values(r) <= level) ++r;
  return es.vectors.leftCols(r);
}

LowRankFit fit_L(const SymMatrix& x_star, const Eigen::MatrixXd& basis,
                 const Support& support) {
  const Eigen::Index m = x_star.dim();
  const Eigen::Index r = basis.cols();
  LowRankFit fit;
  fit.M = Eigen::MatrixXd::Zero(r, r);
  if (r == 0) {
    fit.L = SymMatrix::zero(m);
    return fit;
  }
  if (basis.rows() != m) throw DimensionMismatch("fit_L: basis rows != m");

  // Unknowns: M(a, b) for a ≤ b. Each off-support pair (i, j) contributes
  // [V M Vᵀ]_ij = −X*_ij.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> unknowns;
  for (Eigen::Index a = 0; a < r; ++a) {
    for (Eigen::Index b = a; b < r; ++b) unknowns.emplace_back(a, b);
  }
  std::vector<IndexPair> rows;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      if (!support.contains({i, j})) rows.emplace_back(i, j);
    }
  }

  const auto n_unknowns = static_cast<Eigen::Index>(unknowns.size());
  const auto n_rows = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd a(n_rows, n_unknowns);
  Eigen::VectorXd rhs(n_rows);
  for (Eigen::Index k = 0; k < n_rows; ++k) {
    const auto [i, j] = rows[k];
    rhs(k) = -x_star(i, j);
    for (Eigen::Index c = 0; c < n_unknowns; ++c) {
      const auto [p, q] = unknowns[c];
      a(k, c) = p == q ? basis(i, p) * basis(j, p)
                       : basis(i, p) * basis(j, q) + basis(i, q) * basis(j, p);
    }
  }

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(n_unknowns);
  if (n_rows > 0) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
    cod.setThreshold(1e-10);
    fit.rank_deficient = cod.rank() < n_unknowns;
    theta = cod.solve(rhs);
  } else {
    fit.rank_deficient = true;
  }

  for (Eigen::Index c = 0; c < n_unknowns; ++c) {
    const auto [p, q] = unknowns[c];
    fit.M(p, q) = theta(c);
    fit.M(q, p) = theta(c);
  }
  fit.M = psd_project(SymMatrix(fit.M)).mat();
  fit.L = SymMatrix(basis * fit.M * basis.transpose());
  return fit;
}

Recovery assemble(const DualPoint& p_star, const CovarianceEstimate& ce,
                  const ProblemSpec& spec, const SymMatrix& x_star,
                  const LowRankFit& fit, const Support& support,
                  const RecoveryConfig& cfg) {
  const Eigen::Index m = x_star.dim();
  const SymMatrix& l = fit.L;
  const Eigen::MatrixXd s_raw = (x_star + l).mat();

  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m, m);
  s.diagonal() = s_raw.diagonal();
  double residual_sq = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      if (support.contains({i, j})) {
        s(i, j) = s_raw(i, j);
        s(j, i) = s_raw(i, j);
      } else {
        residual_sq += 2.0 * s_raw(i, j) * s_raw(i, j);
      }
    }
  }

  Recovery out;
  Decomposition& d = out.decomposition;
  d.S = SymMatrix(s);
  d.L = l;
  d.X = x_star;
  d.support = support;
  d.rank_L = numerical_rank(l, cfg.rank_rel_tol);
  d.sigma_m = inverse_spd(x_star);

  KktReport& k = out.kkt;
  k.kl_gap = std::abs(kl2_of_X(ce.sigma_hat(), x_star) - spec.delta());
  k.primal_objective = l.trace() + spec.gamma() * offdiag_l1(d.S);
  k.dual_objective = -dual_objective(p_star, ce, spec);
  k.duality_gap = std::abs(k.primal_objective - k.dual_objective);
  k.comp_slack = inner(p_star.U, l);
  for (const auto& [i, j] : support) {
    k.support_margin =
        std::max(k.support_margin, 0.5 * spec.gamma() - std::abs(p_star.U(i, j)));
  }
  k.lowrank_residual = std::sqrt(residual_sq);
  const SymMatrix recon = d.S - d.L;
  k.reconstruction_error = (recon - x_star).norm() / x_star.norm();
  k.min_eig_S_minus_L = eig_sym(recon).values(0);
  k.feasibility_violation = k.reconstruction_error > cfg.reconstruction_tol ||
                            !is_positive_definite(recon);
  k.residual_warning = k.lowrank_residual > cfg.residual_warn * x_star.norm();
  k.rank_deficient_ls = fit.rank_deficient;
  return out;
}

Recovery recover(const DualPoint& p_star, const CovarianceEstimate& ce,
                 const ProblemSpec& spec, const RecoveryConfig& cfg) {
  const SymMatrix x = primal_X(p_star, ce);
  const Support support =
      detect_support(p_star.U, spec.gamma(), cfg.support_rel_tol);
  const Eigen::MatrixXd basis = detect_kernel(p_star.U, cfg.kernel_rel_tol);
  const LowRankFit fit = fit_L(x, basis, support);
  return assemble(p_star, ce, spec, x, fit, support, cfg);
}

}  // namespace lvgm
