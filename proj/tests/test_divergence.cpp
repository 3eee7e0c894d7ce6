#include <cmath>
#include <numbers>

#include "doctest.h"
#include "lvgm/divergence.hpp"
#include "lvgm/random.hpp"
#include "oracles.hpp"

using namespace lvgm;

namespace {

SymMatrix sym2(double a, double b, double c) {
  Eigen::Matrix2d m;
  m << a, b, b, c;
  return SymMatrix(m);
}

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

}  // namespace

TEST_CASE("kl2 closed-form values") {
  CHECK(kl2(SymMatrix::identity(2), SymMatrix::identity(2)) == doctest::Approx(0.0));
  CHECK(kl2(SymMatrix::diagonal(Eigen::Vector2d(2, 1)), SymMatrix::identity(2)) ==
        doctest::Approx(1.0 - std::log(2.0)).epsilon(1e-13));
  CHECK(kl2(SymMatrix::diagonal(Eigen::VectorXd::Constant(1, 4.0)),
            SymMatrix::identity(1)) ==
        doctest::Approx(3.0 - std::log(4.0)).epsilon(1e-13));
  CHECK_THROWS_AS(kl2(SymMatrix::identity(2), SymMatrix::identity(3)),
                  DimensionMismatch);
  CHECK_THROWS_AS(kl2(SymMatrix::identity(2), sym2(1, 2, 1)), NotPositiveDefinite);
}

TEST_CASE("kl2 is nonnegative and vanishes on equal pairs") {
  RandomStream rng(21, {});
  for (int k = 0; k < 50; ++k) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng.below(6));
    const SymMatrix a = oracle::random_spd(m, rng);
    const SymMatrix b = oracle::random_spd(m, rng);
    const double d = kl2(a, b);
    CHECK(d >= -1e-12);
    CHECK(std::abs(d - oracle::kl2_direct(a.mat(), b.mat())) <=
          1e-9 * std::max(1.0, d));
    CHECK(std::abs(kl2(a, a)) <= 1e-12);
  }
}

TEST_CASE("kl2_of_X") {
  const SymMatrix s = sym2(2, 0.3, 1);
  CHECK(std::abs(kl2_of_X(s, inverse_spd(s))) <= 1e-12);
  CHECK(kl2_of_X(SymMatrix::identity(2), SymMatrix::diagonal(Eigen::Vector2d(2, 1))) ==
        doctest::Approx(1.0 - std::log(2.0)).epsilon(1e-13));
  RandomStream rng(22, {});
  for (int k = 0; k < 30; ++k) {
    const SymMatrix a = oracle::random_spd(5, rng);
    const SymMatrix x = oracle::random_spd(5, rng);
    const Eigen::MatrixXd x_inv = x.mat().partialPivLu().inverse();
    CHECK(std::abs(kl2_of_X(a, x) - oracle::kl2_direct(a.mat(), x_inv)) <= 1e-10);
    CHECK(std::abs(kl2_of_X(a, x) - kl2(a, inverse_spd(x))) <= 1e-10);
  }
}

TEST_CASE("delta_max") {
  CHECK(delta_max(SymMatrix::diagonal(Eigen::Vector3d(1, 2, 3))) == 0.0);
  CHECK(delta_max(sym2(1, 0.5, 1)) == doctest::Approx(std::log(4.0 / 3.0)).epsilon(1e-13));
  CHECK(oracle::min_kl2_over_diagonals(sym2(1, 0.5, 1).mat()) ==
        doctest::Approx(std::log(4.0 / 3.0)).epsilon(1e-9));

  RandomStream rng(23, {});
  for (int k = 0; k < 10; ++k) {
    const SymMatrix s = oracle::random_spd(4, rng);
    const double dm = delta_max(s);
    CHECK(dm >= 0.0);
    CHECK(std::abs(dm - oracle::min_kl2_over_diagonals(s.mat())) <= 1e-6);
    CHECK(std::abs(dm - kl2(s, dd(s))) <= 1e-12 * std::max(1.0, dm));
    for (int t = 0; t < 100; ++t) {
      Eigen::VectorXd d(4);
      for (int i = 0; i < 4; ++i) d(i) = std::exp(rng.uniform(-2.0, 2.0));
      CHECK(kl2(s, SymMatrix::diagonal(d)) >= dm - 1e-12);
    }
  }
}

TEST_CASE("nll and the likelihood bound") {
  const SymMatrix one = SymMatrix::identity(1);
  CHECK(nll(one, 2, one) == doctest::Approx(1.0 + kLog2Pi).epsilon(1e-14));

  RandomStream rng(24, {});
  for (int k = 0; k < 20; ++k) {
    const SymMatrix sh = oracle::random_spd(4, rng);
    const SymMatrix a = oracle::random_spd(4, rng);
    const SymMatrix b = oracle::random_spd(4, rng);
    const std::int64_t n = 10 + static_cast<std::int64_t>(rng.below(1000));
    const double half_n = 0.5 * static_cast<double>(n);
    const double scale = std::max(1.0, std::abs(nll(sh, n, a)));
    CHECK(std::abs((nll(sh, n, a) - nll(sh, n, sh)) - half_n * kl2(sh, a)) <=
          1e-10 * scale);
    CHECK(std::abs((nll(sh, n, a) - nll(sh, n, b)) -
                   half_n * (kl2(sh, a) - kl2(sh, b))) <= 1e-9 * scale);

    const CovarianceEstimate ce(sh, n);
    const double delta = rng.uniform(0.01, 1.0);
    const double bound = delta_to_nll_bound(ce, delta);
    CHECK(bound == doctest::Approx(half_n * (delta + cholesky_logdet(sh) + 4.0 +
                                             4.0 * kLog2Pi))
                       .epsilon(1e-13));
    // The bound is the likelihood of any Σ on the KL sphere of radius δ.
    CHECK(std::abs(nll(sh, n, sh) + half_n * delta - bound) <= 1e-10 * bound);
  }
}

TEST_CASE("CovarianceEstimate and ProblemSpec validation") {
  CHECK_THROWS_AS(CovarianceEstimate(sym2(1, 2, 1), 10), NotPositiveDefinite);
  CHECK_THROWS_AS(CovarianceEstimate(SymMatrix::identity(2), 1), Error);
  CHECK_THROWS_AS(ProblemSpec(0.0, 0.1), Error);
  CHECK_THROWS_AS(ProblemSpec(1.0, -0.1), Error);

  const CovarianceEstimate diag(SymMatrix::diagonal(Eigen::Vector2d(1, 2)), 10);
  CHECK_THROWS_AS(ProblemSpec(1.0, 0.01, diag), InfeasibleSpec);

  const CovarianceEstimate ce(sym2(1, 0.5, 1), 10);
  const double dm = delta_max(ce.sigma_hat());
  CHECK_NOTHROW(ProblemSpec(1.0, 0.5 * dm, ce));
  CHECK_THROWS_AS(ProblemSpec(1.0, dm, ce), InfeasibleSpec);
  CHECK_THROWS_AS(ProblemSpec(1.0, 2.0 * dm, ce), InfeasibleSpec);
}
