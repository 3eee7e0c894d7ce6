#include "lvgm/baseline.hpp"

#include <cmath>
#include <limits>

namespace lvgm {

namespace {

double soft(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace

void ClassicSpec::validate() const {
  if (!(lambda_reg >= 0.0)) throw Error("lambda_reg must be nonnegative");
  if (!(gamma > 0.0)) throw Error("gamma must be positive");
  if (!(rho > 0.0)) throw Error("rho must be positive");
  if (max_iters <= 0) throw Error("max_iters must be positive");
  if (!(tol_primal > 0.0) || !(tol_dual > 0.0)) {
    throw Error("ADMM tolerances must be positive");
  }
}

double classic_objective(const SymMatrix& sigma, const SymMatrix& s,
                         const SymMatrix& l, double lambda_reg, double gamma) {
  const SymMatrix r = s - l;
  if (!is_positive_definite(r)) return std::numeric_limits<double>::infinity();
  return -cholesky_logdet(r) + inner(r, sigma) +
         lambda_reg * (gamma * offdiag_l1(s) + l.trace());
}

ClassicResult solve_classic(const SymMatrix& sigma, const ClassicSpec& spec) {
  spec.validate();
  cholesky_factor(sigma);  // throws NotPositiveDefinite

  const Eigen::Index m = sigma.dim();
  const double rho = spec.rho;
  const double lam = spec.lambda_reg;
  const double s_level = lam * spec.gamma / (2.0 * rho);
  const double l_shift = lam / rho;
  const Eigen::MatrixXd& sig = sigma.mat();

  Eigen::MatrixXd r = inverse_spd(dd(sigma)).mat();
  Eigen::MatrixXd s = r;
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(m, m);

  ClassicResult out;
  for (int it = 1; it <= spec.max_iters; ++it) {
    // R: ρR − R⁻¹ = ρ(S − L) − Σ − Y, solved in the eigenbasis.
    {
      const auto es = eig_sym(SymMatrix(rho * (s - l) - sig - y));
      Eigen::VectorXd w = es.values;
      for (Eigen::Index i = 0; i < m; ++i) {
        w(i) = (w(i) + std::sqrt(w(i) * w(i) + 4.0 * rho)) / (2.0 * rho);
      }
      r = from_spectrum(w, es.vectors).mat();
    }
    const Eigen::MatrixXd split_prev = s - l;

    // S: soft threshold off the diagonal only.
    {
      const Eigen::MatrixXd t = r + l + y / rho;
      for (Eigen::Index j = 0; j < m; ++j) {
        s(j, j) = t(j, j);
        for (Eigen::Index i = j + 1; i < m; ++i) {
          s(i, j) = soft(0.5 * (t(i, j) + t(j, i)), s_level);
          s(j, i) = s(i, j);
        }
      }
    }

    // L: prox of λ·tr on the PSD cone.
    {
      const auto es = eig_sym(SymMatrix(s - r - y / rho));
      const Eigen::VectorXd w = (es.values.array() - l_shift).cwiseMax(0.0);
      l = from_spectrum(w, es.vectors).mat();
    }

    const Eigen::MatrixXd resid = r - s + l;
    y += rho * resid;

    out.iterations = it;
    out.primal_residual = resid.norm();
    out.dual_residual = rho * ((s - l) - split_prev).norm();
    out.objective_history.push_back(
        -cholesky_logdet(SymMatrix(r)) + r.cwiseProduct(sig).sum() +
        lam * (spec.gamma * offdiag_l1(SymMatrix(s)) + l.trace()));
    if (out.primal_residual <= spec.tol_primal &&
        out.dual_residual <= spec.tol_dual) {
      out.converged = true;
      break;
    }
  }

  Decomposition& d = out.decomposition;
  d.S = SymMatrix(s);
  d.L = SymMatrix(l);
  d.support = nonzero_support(d.S);
  d.rank_L = numerical_rank(d.L, 1e-8);
  const SymMatrix x = d.S - d.L;
  d.X = is_positive_definite(x) ? x : SymMatrix(r);
  d.sigma_m = inverse_spd(d.X);
  out.objective = classic_objective(sigma, d.S, d.L, lam, spec.gamma);
  return out;
}

}  // namespace lvgm
