#include <cmath>

#include "doctest.h"
#include "lvgm/calibration.hpp"
#include "lvgm/synthetic.hpp"

using namespace lvgm;

TEST_CASE("ground truth invariants at the reference configuration") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const GroundTruth gt = gen_ground_truth(20, 4, 0.1, seed);
    CHECK(gt.support0.size() == 19);
    CHECK(nonzero_support(gt.S0) == gt.support0);
    CHECK(eig_sym(gt.S0 - gt.L0).values(0) >= 0.1 - 1e-12);
    const auto w = eig_sym(gt.L0).values;
    CHECK(w(0) >= -1e-10);
    CHECK(w(15) <= 1e-10 * w(19));
    CHECK(w(16) > 1e-6 * w(19));
    CHECK(numerical_rank(gt.L0) == 4);
    CHECK(w(19) == doctest::Approx(gt.lowrank_scale).epsilon(1e-12));
    for (const auto& [i, j] : gt.support0) {
      CHECK(std::abs(gt.S0(i, j)) >= 0.2);
      CHECK(std::abs(gt.S0(i, j)) <= 0.5);
    }
    const Eigen::MatrixXd prod = gt.sigma_m.mat() * (gt.S0 - gt.L0).mat();
    CHECK((prod - Eigen::MatrixXd::Identity(20, 20)).norm() <= 1e-8);
  }
}

TEST_CASE("rank zero ground truth") {
  const GroundTruth gt = gen_ground_truth(8, 0, 0.2, 4);
  CHECK(gt.L0 == SymMatrix::zero(8));
  CHECK((gt.sigma_m - inverse_spd(gt.S0)).norm() <= 1e-12);
}

TEST_CASE("ground truth is deterministic per seed") {
  const GroundTruth a = gen_ground_truth(20, 4, 0.1, 99);
  const GroundTruth b = gen_ground_truth(20, 4, 0.1, 99);
  CHECK(a.S0 == b.S0);
  CHECK(a.L0 == b.L0);
  CHECK(a.sigma_m == b.sigma_m);
  CHECK(a.support0 == b.support0);
  const GroundTruth c = gen_ground_truth(20, 4, 0.1, 100);
  CHECK_FALSE(a.L0 == c.L0);
}

TEST_CASE("ground truth argument checks") {
  CHECK_THROWS_AS(gen_ground_truth(5, 5, 0.1, 1), Error);
  CHECK_THROWS_AS(gen_ground_truth(5, -1, 0.1, 1), Error);
  CHECK_THROWS_AS(gen_ground_truth(5, 1, 0.0, 1), Error);
  CHECK_THROWS_AS(gen_ground_truth(5, 1, 1.0, 1), Error);
  CHECK_THROWS_AS(gen_ground_truth(1, 0, 0.1, 1), Error);
}

TEST_CASE("sample_data") {
  const GroundTruth gt = gen_ground_truth(3, 1, 0.4, 8);
  const Eigen::MatrixXd big = sample_data(gt, 1000000, 5);
  const SymMatrix s = sample_covariance(big).sigma_hat();
  CHECK((s.mat() - gt.sigma_m.mat()).cwiseAbs().maxCoeff() <= 0.01);

  CHECK(sample_data(gt, 50, 5) == sample_data(gt, 50, 5));
  CHECK_FALSE(sample_data(gt, 50, 5) == sample_data(gt, 50, 6));
  CHECK_THROWS_AS(sample_data(gt, 1, 5), Error);

  const GroundTruth g20 = gen_ground_truth(20, 4, 0.1, 1);
  CHECK_THROWS_AS(sample_covariance(sample_data(g20, 2, 1)), SingularCovariance);
}

TEST_CASE("sample covariance error shrinks as N grows") {
  const GroundTruth gt = gen_ground_truth(5, 1, 0.3, 12);
  const auto err = [&](std::int64_t n) {
    return (sample_covariance(sample_data(gt, n, 3)).sigma_hat() - gt.sigma_m).norm();
  };
  CHECK(err(10000) < err(100));
}

TEST_CASE("recovery_metrics") {
  const GroundTruth gt = gen_ground_truth(20, 4, 0.1, 1);
  Decomposition perfect;
  perfect.S = gt.S0;
  perfect.L = gt.L0;
  perfect.X = gt.S0 - gt.L0;
  perfect.support = gt.support0;
  perfect.rank_L = 4;
  RecoveryMetrics r = recovery_metrics(perfect, gt);
  CHECK(r.support_f1 == 1.0);
  CHECK(r.rank_err == 0);
  CHECK(r.frob_err_X == 0.0);

  Decomposition empty = perfect;
  empty.support.clear();
  r = recovery_metrics(empty, gt);
  CHECK(r.support_f1 == 0.0);
  CHECK(r.false_neg == 19);

  Decomposition full = perfect;
  for (Eigen::Index i = 0; i < 20; ++i) {
    for (Eigen::Index j = i + 1; j < 20; ++j) full.support.emplace(i, j);
  }
  full.rank_L = 6;
  r = recovery_metrics(full, gt);
  CHECK(r.false_pos == 171);
  CHECK(r.false_neg == 0);
  CHECK(r.rank_err == 2);

  Decomposition wrong = perfect;
  wrong.X = SymMatrix::identity(5);
  CHECK_THROWS_AS(recovery_metrics(wrong, gt), DimensionMismatch);
}
