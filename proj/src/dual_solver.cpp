#include "lvgm/dual_solver.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace lvgm {

namespace {

// W = λ⁻¹ofd(U) + Σ̂.
SymMatrix dual_w(const DualPoint& p, const CovarianceEstimate& ce) {
  if (!(p.lambda > 0.0)) throw InfeasiblePoint("lambda must be positive");
  if (p.U.dim() != ce.dim()) {
    throw DimensionMismatch("dual point and covariance dimensions differ");
  }
  return ofd(p.U) * (1.0 / p.lambda) + ce.sigma_hat();
}

// Lower Cholesky factor of W, or nothing when W is not positive definite.
std::optional<Eigen::MatrixXd> w_factor(const DualPoint& p,
                                        const CovarianceEstimate& ce) {
  const SymMatrix w = dual_w(p, ce);
  if (!is_positive_definite(w)) return std::nullopt;
  return cholesky_factor(w);
}

Eigen::MatrixXd factor_or_throw(const DualPoint& p,
                                const CovarianceEstimate& ce) {
  auto l = w_factor(p, ce);
  if (!l) {
    throw InfeasiblePoint(
        "lambda^-1 ofd(U) + sigma_hat is not positive definite");
  }
  return *l;
}

double objective_from_factor(const Eigen::MatrixXd& l, double lambda,
                             const CovarianceEstimate& ce,
                             const ProblemSpec& spec) {
  const double logdet_w = 2.0 * l.diagonal().array().log().sum();
  return -lambda * (logdet_w - ce.logdet() - spec.delta());
}

// J̃(t) − J̃(p), accurate even when the change is far below the rounding
// level of J̃ itself: log|W_t| − log|W_p| is taken as Σ log1p(μ) over the
// eigenvalues μ of L_p⁻¹(W_t − W_p)L_p⁻ᵀ.
double objective_change(const DualPoint& p, const Eigen::MatrixXd& l_p,
                        const DualPoint& t, const CovarianceEstimate& ce,
                        const ProblemSpec& spec) {
  const double logdet_p = 2.0 * l_p.diagonal().array().log().sum();
  const double level_p = logdet_p - ce.logdet() - spec.delta();
  Eigen::MatrixXd a =
      (ofd(t.U) * (1.0 / t.lambda) - ofd(p.U) * (1.0 / p.lambda)).mat();
  const auto low = l_p.triangularView<Eigen::Lower>();
  low.solveInPlace(a);
  a.transposeInPlace();
  low.solveInPlace(a);
  const Eigen::VectorXd mu = eig_sym(SymMatrix(a)).values;
  double dlogdet = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) dlogdet += std::log1p(mu(i));
  return -(t.lambda - p.lambda) * level_p - t.lambda * dlogdet;
}

SymMatrix inverse_from_factor(const Eigen::MatrixXd& l) {
  Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(l.rows(), l.cols());
  l.triangularView<Eigen::Lower>().solveInPlace(inv);
  l.triangularView<Eigen::Lower>().transpose().solveInPlace(inv);
  return SymMatrix(inv);
}

// Projection onto {dd(U) = I, |U_ij| ≤ γ/2}.
SymMatrix project_box(const Eigen::MatrixXd& u, double half_gamma) {
  Eigen::MatrixXd r = u.cwiseMax(-half_gamma).cwiseMin(half_gamma);
  r.diagonal().setOnes();
  return SymMatrix(r);
}

// Dykstra's PSD-side iterate misses the box by about dykstra_tol. Scaling to
// unit diagonal by congruence and then shrinking towards I keeps it PSD and
// puts it exactly in 𝒰, at a distance of the same order.
Eigen::MatrixXd restore_membership(const Eigen::MatrixXd& x, double half_gamma) {
  const Eigen::VectorXd d = x.diagonal();
  if ((d.array() <= 0.0).any()) return x;
  const Eigen::VectorXd s = d.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd u = s.asDiagonal() * x * s.asDiagonal();
  u = 0.5 * (u + u.transpose());
  u.diagonal().setZero();
  const double largest = u.cwiseAbs().maxCoeff();
  if (largest > half_gamma) u *= half_gamma / largest;
  u.diagonal().setOnes();
  return u;
}

}  // namespace

double point_norm(double lambda, const SymMatrix& u) {
  return std::sqrt(lambda * lambda + u.mat().squaredNorm());
}

double multiplier_set_violation(const SymMatrix& u, double gamma) {
  const Eigen::MatrixXd& m = u.mat();
  double v = (m.diagonal().array() - 1.0).abs().maxCoeff();
  Eigen::MatrixXd off = m.cwiseAbs();
  off.diagonal().setZero();
  v = std::max(v, off.maxCoeff() - 0.5 * gamma);
  v = std::max(v, -eig_sym(u).values(0));
  return std::max(v, 0.0);
}

void SolverConfig::validate() const {
  if (!(grad_tol > 0.0)) throw Error("grad_tol must be positive");
  if (max_iters <= 0) throw Error("max_iters must be positive");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) {
    throw Error("armijo_c must lie in (0, 1)");
  }
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
    throw Error("backtrack_factor must lie in (0, 1)");
  }
  if (dykstra_iters <= 0) throw Error("dykstra_iters must be positive");
  if (!(dykstra_tol > 0.0)) throw Error("dykstra_tol must be positive");
  if (!(lambda_floor > 0.0)) throw Error("lambda_floor must be positive");
  if (max_backtracks <= 0) throw Error("max_backtracks must be positive");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::converged:
      return "converged";
    case Termination::max_iterations:
      return "max_iterations";
    case Termination::line_search_failed:
      return "line_search_failed";
  }
  return "unknown";
}

void SolverTrace::write_jsonl(std::ostream& out) const {
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["iter"] = r.iter;
    j["objective"] = r.objective;
    j["pgrad_norm"] = r.pgrad_norm;
    j["step"] = r.step;
    j["lambda"] = r.lambda;
    out << j.dump() << '\n';
  }
}

double dual_objective(const DualPoint& p, const CovarianceEstimate& ce,
                      const ProblemSpec& spec) {
  return objective_from_factor(factor_or_throw(p, ce), p.lambda, ce, spec);
}

DualGradient dual_gradient(const DualPoint& p, const CovarianceEstimate& ce,
                           const ProblemSpec& spec) {
  const Eigen::MatrixXd l = factor_or_throw(p, ce);
  const SymMatrix x = inverse_from_factor(l);
  const SymMatrix u_off = ofd(p.U);
  const double logdet_w = 2.0 * l.diagonal().array().log().sum();
  DualGradient g;
  g.lambda = -(logdet_w - ce.logdet() - spec.delta()) +
             inner(x, u_off) / p.lambda;
  g.U = -ofd(x);
  return g;
}

Eigen::MatrixXd dual_hessian(const DualPoint& p, const CovarianceEstimate& ce,
                             const ProblemSpec& spec) {
  (void)spec;  // δ enters J̃ linearly in λ and drops out of the Hessian.
  const Eigen::Index m = ce.dim();
  if (m > 40) throw Error("dual_hessian is limited to m <= 40");
  const Eigen::MatrixXd x = inverse_from_factor(factor_or_throw(p, ce)).mat();
  const Eigen::Index n2 = m * m;

  // K = X ⊗ X; K(i*m + k, j*m + l) = X(i, j)·X(k, l) under column-major vec.
  Eigen::MatrixXd k(n2, n2);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      k.block(i * m, j * m, m, m) = x(i, j) * x;
    }
  }
  const Eigen::MatrixXd u_off = ofd(p.U).mat();
  const Eigen::VectorXd u = u_off.reshaped();
  const Eigen::VectorXd ku = k * u;
  const double lam = p.lambda;

  Eigen::MatrixXd h(n2 + 1, n2 + 1);
  h(0, 0) = u.dot(ku) / (lam * lam * lam);
  h.block(1, 0, n2, 1) = -ku / (lam * lam);
  h.block(0, 1, 1, n2) = -ku.transpose() / (lam * lam);
  h.block(1, 1, n2, n2) = k / lam;
  return h;
}

ProjectionResult project_U(const SymMatrix& u_raw, double gamma,
                           const SolverConfig& cfg) {
  if (!(gamma > 0.0)) throw Error("gamma must be positive");
  const double half_gamma = 0.5 * gamma;
  const Eigen::Index m = u_raw.dim();

  Eigen::MatrixXd x = u_raw.mat();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(m, m);
  ProjectionResult r;
  for (int it = 1; it <= cfg.dykstra_iters; ++it) {
    const Eigen::MatrixXd y = project_box(x + p, half_gamma).mat();
    p += x - y;
    const Eigen::MatrixXd x_next = psd_project(SymMatrix(y + q)).mat();
    q += y - x_next;
    const double change = (x_next - x).norm();
    x = x_next;
    r.iterations = it;
    if (change <= cfg.dykstra_tol) {
      r.converged = true;
      break;
    }
  }
  r.U = SymMatrix(restore_membership(x, half_gamma));
  return r;
}

DualSolution solve_dual(const CovarianceEstimate& ce, const ProblemSpec& spec,
                        const SolverConfig& cfg,
                        const std::optional<DualPoint>& start) {
  cfg.validate();
  {
    const double dmax = delta_max(ce.sigma_hat());
    if (spec.delta() >= dmax) {
      std::ostringstream os;
      os.precision(10);
      os << "delta = " << spec.delta() << " is not below delta_max = " << dmax;
      throw InfeasibleSpec(os.str());
    }
  }

  DualSolution sol;
  DualPoint& p = sol.point;
  p = start.value_or(DualPoint::initial(ce.dim()));
  if (p.U.dim() != ce.dim()) {
    throw DimensionMismatch("starting point dimension differs from data");
  }
  Eigen::MatrixXd l_p = factor_or_throw(p, ce);
  double obj = objective_from_factor(l_p, p.lambda, ce, spec);

  // Projection accuracy used by the iterations; tightened when backtracking
  // fails, since near the optimum the projection error of the trial points
  // can outweigh the predicted decrease.
  SolverConfig pcfg = cfg;
  constexpr double kTightestDykstraTol = 1e-14;

  auto trial_point = [&](const DualGradient& g, double s, int* failures) {
    DualPoint t;
    t.lambda = std::max(p.lambda - s * g.lambda, cfg.lambda_floor);
    auto proj = project_U(p.U - g.U * s, spec.gamma(), pcfg);
    if (!proj.converged) ++*failures;
    t.U = std::move(proj.U);
    return t;
  };

  SolverTrace& trace = sol.trace;
  trace.records.push_back({0, obj, 0.0, 0.0, p.lambda});
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    const DualGradient g = dual_gradient(p, ce, spec);

    DualPoint trial = trial_point(g, 1.0, &trace.projection_failures);
    const double scale = std::max(1.0, point_norm(p.lambda, p.U));
    const double pgrad =
        point_norm(trial.lambda - p.lambda, trial.U - p.U) / scale;
    trace.records.back().pgrad_norm = pgrad;
    if (pgrad <= cfg.grad_tol) {
      trace.reason = Termination::converged;
      return sol;
    }

    double s = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < cfg.max_backtracks; ++bt) {
      if (bt > 0) {
        s *= cfg.backtrack_factor;
        trial = trial_point(g, s, &trace.projection_failures);
      }
      auto l = w_factor(trial, ce);
      if (!l) continue;
      const double change = objective_change(p, l_p, trial, ce, spec);
      const double decrease = g.lambda * (trial.lambda - p.lambda) +
                              inner(g.U, trial.U - p.U);
      if (change <= cfg.armijo_c * decrease) {
        p = std::move(trial);
        l_p = std::move(*l);
        obj = objective_from_factor(l_p, p.lambda, ce, spec);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (pcfg.dykstra_tol > kTightestDykstraTol) {
        pcfg.dykstra_tol = std::max(pcfg.dykstra_tol * 1e-2, kTightestDykstraTol);
        --iter;
        continue;
      }
      trace.reason = Termination::line_search_failed;
      return sol;
    }
    trace.records.push_back({iter, obj, 0.0, s, p.lambda});
  }

  // Fill the projected-gradient norm of the final iterate.
  const DualGradient g = dual_gradient(p, ce, spec);
  const DualPoint last = trial_point(g, 1.0, &trace.projection_failures);
  const double scale = std::max(1.0, point_norm(p.lambda, p.U));
  trace.records.back().pgrad_norm =
      point_norm(last.lambda - p.lambda, last.U - p.U) / scale;
  trace.reason = trace.records.back().pgrad_norm <= cfg.grad_tol
                     ? Termination::converged
                     : Termination::max_iterations;
  return sol;
}

}  // namespace lvgm
