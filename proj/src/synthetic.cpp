#include "lvgm/synthetic.hpp"

#include <cmath>
#include <cstdlib>
#include <vector>

#include "lvgm/random.hpp"

namespace lvgm {

namespace {

constexpr std::uint64_t kPatternStream = 1;
constexpr std::uint64_t kLowRankStream = 2;

}  // namespace

GroundTruth gen_ground_truth(Eigen::Index m, int rank, double density,
                             std::uint64_t seed,
                             const GroundTruthOptions& opts) {
  if (m < 2) throw Error("ground truth needs m >= 2");
  if (rank < 0 || rank >= m) throw Error("rank must satisfy 0 <= rank < m");
  if (!(density > 0.0 && density < 1.0)) {
    throw Error("density must lie in (0, 1)");
  }

  const Eigen::Index n_pairs = m * (m - 1) / 2;
  const auto n_edges = static_cast<Eigen::Index>(
      std::ceil(density * static_cast<double>(n_pairs) - 1e-9));

  for (int attempt = 0; attempt < opts.max_retries; ++attempt) {
    RandomStream pattern_rng(
        seed, {kPatternStream, static_cast<std::uint64_t>(attempt)});
    std::vector<IndexPair> pairs;
    pairs.reserve(n_pairs);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = i + 1; j < m; ++j) pairs.emplace_back(i, j);
    }
    // Partial Fisher–Yates: the first n_edges slots are the pattern.
    for (Eigen::Index k = 0; k < n_edges; ++k) {
      const auto pick =
          k + static_cast<Eigen::Index>(pattern_rng.below(n_pairs - k));
      std::swap(pairs[k], pairs[pick]);
    }

    Eigen::MatrixXd off = Eigen::MatrixXd::Zero(m, m);
    Support support;
    for (Eigen::Index k = 0; k < n_edges; ++k) {
      const auto [i, j] = pairs[k];
      const double mag = pattern_rng.uniform(opts.offdiag_lo, opts.offdiag_hi);
      const double v = pattern_rng.uniform() < 0.5 ? -mag : mag;
      off(i, j) = v;
      off(j, i) = v;
      support.emplace(i, j);
    }

    Eigen::MatrixXd l0 = Eigen::MatrixXd::Zero(m, m);
    if (rank > 0) {
      RandomStream lr_rng(seed,
                          {kLowRankStream, static_cast<std::uint64_t>(attempt)});
      const Eigen::MatrixXd f = lr_rng.normal_matrix(m, rank);
      l0 = f * f.transpose();
      const auto w = eig_sym(SymMatrix(l0)).values;
      const double top = w(m - 1);
      // Full column rank of F, with margin.
      if (!(w(m - rank) > 1e-6 * top)) continue;
      l0 *= opts.lowrank_scale / top;
    }

    double a = opts.diag_start;
    SymMatrix x;
    for (int grow = 0; grow < 200; ++grow) {
      Eigen::MatrixXd s0 = off;
      s0.diagonal().setConstant(a);
      x = SymMatrix(s0 - l0);
      const double low = eig_sym(x).values(0);
      if (low >= opts.min_eig) break;
      a += opts.min_eig - low;
    }
    if (eig_sym(x).values(0) < opts.min_eig) continue;

    GroundTruth gt;
    Eigen::MatrixXd s0 = off;
    s0.diagonal().setConstant(a);
    gt.S0 = SymMatrix(s0);
    gt.L0 = SymMatrix(l0);
    gt.sigma_m = inverse_spd(gt.S0 - gt.L0);
    gt.support0 = std::move(support);
    gt.rank0 = rank;
    gt.density = density;
    gt.seed = seed;
    gt.diag_level = a;
    gt.lowrank_scale = rank > 0 ? opts.lowrank_scale : 0.0;
    return gt;
  }
  throw ConstructionFailed("could not construct a ground truth instance in " +
                           std::to_string(opts.max_retries) + " attempts");
}

Eigen::MatrixXd sample_data(const GroundTruth& gt, std::int64_t n,
                            std::uint64_t seed) {
  if (n < 2) throw Error("sample_data needs N >= 2");
  const Eigen::MatrixXd chol = cholesky_factor(gt.sigma_m);
  RandomStream rng(seed, {0x5a4d});
  const Eigen::MatrixXd z = rng.normal_matrix(n, gt.sigma_m.dim());
  return z * chol.transpose();
}

RecoveryMetrics recovery_metrics(const Decomposition& est,
                                 const GroundTruth& gt) {
  if (est.X.dim() != gt.S0.dim()) {
    throw DimensionMismatch("recovery_metrics: estimate and truth differ in m");
  }
  RecoveryMetrics r;
  int tp = 0;
  for (const auto& p : est.support) {
    if (gt.support0.contains(p)) {
      ++tp;
    } else {
      ++r.false_pos;
    }
  }
  r.false_neg = static_cast<int>(gt.support0.size()) - tp;
  const int denom = 2 * tp + r.false_pos + r.false_neg;
  // Both supports empty counts as a perfect match.
  r.support_f1 = denom == 0 ? 1.0 : 2.0 * tp / denom;
  r.rank_err = std::abs(est.rank_L - gt.rank0);
  const SymMatrix x0 = gt.S0 - gt.L0;
  r.frob_err_X = (est.X - x0).norm() / x0.norm();
  return r;
}

}  // namespace lvgm
