#include <cmath>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "lvgm/dual_solver.hpp"
#include "lvgm/random.hpp"
#include "oracles.hpp"

using namespace lvgm;

namespace {

SymMatrix sym2(double a, double b, double c) {
  Eigen::Matrix2d m;
  m << a, b, b, c;
  return SymMatrix(m);
}

/// Central-difference gradient in the coordinates (λ, U_ij for i < j), where
/// moving U_ij moves both mirrored entries.
Eigen::VectorXd fd_gradient(const DualPoint& p, const CovarianceEstimate& ce,
                            const ProblemSpec& spec, double h) {
  const Eigen::Index m = ce.dim();
  Eigen::VectorXd g(1 + m * (m - 1) / 2);
  DualPoint a = p, b = p;
  a.lambda += h;
  b.lambda -= h;
  g(0) = (dual_objective(a, ce, spec) - dual_objective(b, ce, spec)) / (2 * h);
  Eigen::Index k = 1;
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = j + 1; i < m; ++i, ++k) {
      Eigen::MatrixXd e = Eigen::MatrixXd::Zero(m, m);
      e(i, j) = e(j, i) = h;
      const DualPoint up{p.lambda, SymMatrix(p.U.mat() + e)};
      const DualPoint dn{p.lambda, SymMatrix(p.U.mat() - e)};
      g(k) = (dual_objective(up, ce, spec) - dual_objective(dn, ce, spec)) / (2 * h);
    }
  }
  return g;
}

Eigen::VectorXd analytic_in_pair_coords(const DualGradient& g) {
  const Eigen::Index m = g.U.dim();
  Eigen::VectorXd v(1 + m * (m - 1) / 2);
  v(0) = g.lambda;
  Eigen::Index k = 1;
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = j + 1; i < m; ++i, ++k) v(k) = 2.0 * g.U(i, j);
  }
  return v;
}

struct Instance {
  CovarianceEstimate ce;
  ProblemSpec spec;
};

Instance random_instance(Eigen::Index m, RandomStream& rng) {
  CovarianceEstimate ce(oracle::random_spd(m, rng), 100);
  const double delta = rng.uniform(0.2, 0.8) * delta_max(ce.sigma_hat());
  return {ce, ProblemSpec(rng.uniform(0.3, 1.5), delta, ce)};
}

}  // namespace

TEST_CASE("dual_objective closed forms") {
  RandomStream rng(41, {});
  const CovarianceEstimate ce(oracle::random_spd(4, rng), 30);
  const ProblemSpec spec(0.7, 0.05);
  for (double lam : {0.1, 1.0, 7.5}) {
    const DualPoint p{lam, SymMatrix::identity(4)};
    CHECK(dual_objective(p, ce, spec) == doctest::Approx(lam * 0.05).epsilon(1e-12));
  }

  const CovarianceEstimate eye(SymMatrix::identity(2), 10);
  const ProblemSpec s2(1.0, 0.1);
  const DualPoint p{1.0, sym2(1, 0.5, 1)};
  CHECK(dual_objective(p, eye, s2) ==
        doctest::Approx(-std::log(0.75) + 0.1).epsilon(1e-13));

  CHECK_THROWS_AS(dual_objective({0.1, sym2(1, 0.5, 1)}, eye, s2), InfeasiblePoint);
  CHECK_THROWS_AS(dual_objective({0.0, sym2(1, 0.0, 1)}, eye, s2), InfeasiblePoint);
}

TEST_CASE("dual_gradient at U = I") {
  RandomStream rng(42, {});
  const CovarianceEstimate ce(oracle::random_spd(5, rng), 30);
  const ProblemSpec spec(0.7, 0.05);
  const DualGradient g = dual_gradient(DualPoint::initial(5), ce, spec);
  CHECK(g.lambda == doctest::Approx(0.05).epsilon(1e-12));
  const SymMatrix expected = -ofd(inverse_spd(ce.sigma_hat()));
  CHECK((g.U - expected).norm() <= 1e-12 * expected.norm());
}

TEST_CASE("dual_gradient matches central differences") {
  RandomStream rng(43, {});
  for (int k = 0; k < 20; ++k) {
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng.below(5));
    const auto inst = random_instance(m, rng);
    const DualPoint p = oracle::random_feasible_point(inst.ce.sigma_hat(),
                                                      inst.spec.gamma(), rng);
    const Eigen::VectorXd an =
        analytic_in_pair_coords(dual_gradient(p, inst.ce, inst.spec));
    const Eigen::VectorXd fd = fd_gradient(p, inst.ce, inst.spec, 1e-6);
    CHECK(oracle::rel_err(an, fd) <= 1e-5);

    // Euler identity of a degree-one homogeneous function.
    const DualGradient g = dual_gradient(p, inst.ce, inst.spec);
    const double euler = p.lambda * g.lambda + inner(ofd(p.U), g.U);
    const double j = dual_objective(p, inst.ce, inst.spec);
    CHECK(std::abs(euler - j) <= 1e-9 * std::max(1.0, std::abs(j)));
  }
}

TEST_CASE("dual_objective is positively homogeneous") {
  RandomStream rng(44, {});
  for (int k = 0; k < 20; ++k) {
    const auto inst = random_instance(5, rng);
    const DualPoint p = oracle::random_feasible_point(inst.ce.sigma_hat(),
                                                      inst.spec.gamma(), rng);
    const double j = dual_objective(p, inst.ce, inst.spec);
    for (double t : {0.25, 0.5, 1.0, 2.0}) {
      const DualPoint q{t * p.lambda, SymMatrix::identity(5) + ofd(p.U) * t};
      const double jt = dual_objective(q, inst.ce, inst.spec);
      CHECK(std::abs(jt - t * j) <= 1e-12 * std::abs(t * j) + 1e-15);
    }
  }
}

TEST_CASE("dual_hessian structure") {
  RandomStream rng(45, {});
  for (int k = 0; k < 10; ++k) {
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng.below(4));
    const auto inst = random_instance(m, rng);
    const DualPoint p = oracle::random_feasible_point(inst.ce.sigma_hat(),
                                                      inst.spec.gamma(), rng);
    const Eigen::MatrixXd h = dual_hessian(p, inst.ce, inst.spec);
    const double hn = h.norm();
    CHECK((h - h.transpose()).norm() <= 1e-14 * hn);

    const Eigen::VectorXd w = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h).eigenvalues();
    CHECK(w(0) >= -1e-8 * hn);
    // One null direction, the rest bounded away from zero.
    CHECK(w(1) > 1e3 * std::max(std::abs(w(0)), 1e-16 * hn));

    Eigen::VectorXd dir(1 + m * m);
    dir(0) = p.lambda;
    dir.tail(m * m) = ofd(p.U).mat().reshaped();
    CHECK((h * dir).norm() <= 1e-8 * hn);

    // Second-order differences along random symmetric directions.
    for (int t = 0; t < 3; ++t) {
      const double dl = rng.uniform(-1.0, 1.0) * p.lambda;
      const SymMatrix du = oracle::random_offdiag(m, rng) * 0.3;
      Eigen::VectorXd v(1 + m * m);
      v(0) = dl;
      v.tail(m * m) = du.mat().reshaped();
      const double quad = v.dot(h * v);
      const double eps = 1e-3;
      auto at = [&](double s) {
        return dual_objective({p.lambda + s * dl, p.U + du * s}, inst.ce, inst.spec);
      };
      const double fd = (at(eps) - 2.0 * at(0.0) + at(-eps)) / (eps * eps);
      CHECK(std::abs(fd - quad) <= 1e-4 * std::max(std::abs(quad), 1e-3 * hn * v.squaredNorm()));
    }
  }
  const CovarianceEstimate big(SymMatrix::identity(41), 100);
  CHECK_THROWS_AS(dual_hessian(DualPoint::initial(41), big, ProblemSpec(1.0, 0.1)),
                  Error);
}

TEST_CASE("project_U") {
  const SolverConfig cfg;
  SUBCASE("points of the set are fixed") {
    RandomStream rng(46, {});
    for (int k = 0; k < 10; ++k) {
      const SymMatrix sigma = oracle::random_spd(5, rng);
      const DualPoint p = oracle::random_feasible_point(sigma, 0.8, rng);
      CHECK((project_U(p.U, 0.8, cfg).U - p.U).norm() <= 1e-12);
    }
  }
  SUBCASE("clamping alone suffices") {
    const ProjectionResult r = project_U(sym2(1, 1, 1), 0.5, cfg);
    CHECK(r.converged);
    CHECK((r.U - sym2(1, 0.25, 1)).norm() <= 1e-12);
  }
  SUBCASE("clamping breaks PSD") {
    Eigen::Matrix3d raw;
    raw << 1, 0.55, 0.55, 0.55, 1, -0.55, 0.55, -0.55, 1;
    const SymMatrix u_raw(raw);
    CHECK(eig_sym(u_raw).values(0) < 0.0);
    const ProjectionResult r = project_U(u_raw, 1.2, cfg);
    CHECK(r.converged);
    CHECK(multiplier_set_violation(r.U, 1.2) <= 1e-9);
    SolverConfig longer = cfg;
    longer.dykstra_iters = 10 * cfg.dykstra_iters;
    longer.dykstra_tol = 1e-14;
    CHECK((project_U(u_raw, 1.2, longer).U - r.U).norm() <= 1e-6);
    // A projection onto a convex set is no farther than any set member.
    CHECK((r.U - u_raw).norm() <= (SymMatrix::identity(3) - u_raw).norm());
  }
  SUBCASE("random inputs") {
    RandomStream rng(47, {});
    SolverConfig longer = cfg;
    longer.dykstra_iters = 10 * cfg.dykstra_iters;
    longer.dykstra_tol = 1e-14;
    for (int k = 0; k < 20; ++k) {
      const SymMatrix raw = oracle::random_sym(5, rng);
      const double gamma = rng.uniform(0.2, 1.5);
      const ProjectionResult r = project_U(raw, gamma, cfg);
      CHECK(multiplier_set_violation(r.U, gamma) <= 1e-9);
      CHECK((project_U(r.U, gamma, cfg).U - r.U).norm() <= 1e-9);
      CHECK((project_U(raw, gamma, longer).U - r.U).norm() <= 1e-6);
    }
  }
}

TEST_CASE("solve_dual on random instances") {
  RandomStream rng(48, {});
  for (int k = 0; k < 5; ++k) {
    const auto inst = random_instance(4, rng);
    const DualSolution sol = solve_dual(inst.ce, inst.spec);
    const auto& recs = sol.trace.records;
    REQUIRE(sol.trace.converged());
    CHECK(recs.back().pgrad_norm <= 1e-6);
    for (std::size_t i = 1; i < recs.size(); ++i) {
      CHECK(recs[i].objective <= recs[i - 1].objective);
      CHECK(recs[i].step > 0.0);
    }
    CHECK(recs.back().objective < 0.0);
    CHECK(sol.point.lambda > 0.0);
    CHECK(multiplier_set_violation(sol.point.U, inst.spec.gamma()) <= 1e-9);
    CHECK(is_positive_definite(ofd(sol.point.U) * (1.0 / sol.point.lambda) +
                               inst.ce.sigma_hat()));
    CHECK(dual_objective(sol.point, inst.ce, inst.spec) == recs.back().objective);
  }
}

TEST_CASE("solve_dual errors") {
  const CovarianceEstimate ce(sym2(1, 0.5, 1), 10);
  const double dm = delta_max(ce.sigma_hat());
  CHECK_THROWS_AS(solve_dual(ce, ProblemSpec(1.0, dm)), InfeasibleSpec);
  CHECK_THROWS_AS(solve_dual(ce, ProblemSpec(1.0, 0.5 * dm), {},
                             DualPoint{0.01, sym2(1, -0.5, 1)}),
                  InfeasiblePoint);
  SolverConfig bad;
  bad.armijo_c = 1.5;
  CHECK_THROWS_AS(solve_dual(ce, ProblemSpec(1.0, 0.5 * dm), bad), Error);
}

TEST_CASE("solve_dual hits the iteration cap honestly") {
  RandomStream rng(49, {});
  const auto inst = random_instance(5, rng);
  SolverConfig cfg;
  cfg.max_iters = 2;
  const DualSolution sol = solve_dual(inst.ce, inst.spec, cfg);
  CHECK(sol.trace.reason == Termination::max_iterations);
  CHECK(sol.trace.records.size() == 3);
  CHECK(sol.trace.records.back().pgrad_norm > cfg.grad_tol);
}

TEST_CASE("trace serializes as JSON lines") {
  RandomStream rng(50, {});
  const auto inst = random_instance(3, rng);
  const DualSolution sol = solve_dual(inst.ce, inst.spec);
  std::stringstream ss;
  sol.trace.write_jsonl(ss);
  std::string line;
  std::size_t n = 0;
  while (std::getline(ss, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("iter").get<int>() == sol.trace.records[n].iter);
    CHECK(j.at("objective").get<double>() == sol.trace.records[n].objective);
    CHECK(j.contains("pgrad_norm"));
    CHECK(j.contains("step"));
    CHECK(j.contains("lambda"));
    ++n;
  }
  CHECK(n == sol.trace.records.size());
  CHECK(to_string(Termination::converged) == "converged");
}
