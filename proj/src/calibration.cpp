#include "lvgm/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "lvgm/random.hpp"

namespace lvgm {

namespace {

SymMatrix gram_over_n(const Eigen::MatrixXd& data) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(data.cols(), data.cols());
  g.selfadjointView<Eigen::Lower>().rankUpdate(data.transpose());
  g /= static_cast<double>(data.rows());
  return SymMatrix(g);
}

struct ReplicateResult {
  double divergence = 0.0;
  std::int64_t discarded = 0;
};

ReplicateResult run_replicate(const CovarianceEstimate& ce,
                              const Eigen::MatrixXd& chol, std::uint64_t seed,
                              std::int64_t k, std::int64_t max_attempts) {
  const Eigen::Index m = ce.dim();
  const std::int64_t n = ce.n_samples();
  ReplicateResult r;
  for (std::int64_t attempt = 0; attempt < max_attempts; ++attempt) {
    RandomStream rng(seed, {static_cast<std::uint64_t>(k),
                            static_cast<std::uint64_t>(attempt)});
    const Eigen::MatrixXd z = rng.normal_matrix(n, m);
    const SymMatrix replicate(chol * gram_over_n(z).mat() * chol.transpose());
    if (!is_positive_definite(replicate)) {
      ++r.discarded;
      continue;
    }
    r.divergence = kl2(replicate, ce.sigma_hat());
    return r;
  }
  r.divergence = std::numeric_limits<double>::quiet_NaN();
  return r;
}

}  // namespace

CovarianceEstimate sample_covariance(const Eigen::MatrixXd& data) {
  if (data.rows() < 2) {
    throw SingularCovariance("sample covariance needs at least 2 rows");
  }
  if (data.cols() < 1) throw Error("data table has no columns");
  if (!data.allFinite()) throw NonFiniteData("data table has non-finite values");
  SymMatrix s = gram_over_n(data);
  try {
    return CovarianceEstimate(std::move(s), data.rows());
  } catch (const NotPositiveDefinite& e) {
    std::ostringstream os;
    os << "sample covariance of " << data.rows() << " rows x " << data.cols()
       << " columns is singular (" << e.what() << ")";
    throw SingularCovariance(os.str());
  }
}

double nearest_rank_quantile(const std::vector<double>& sorted, double a) {
  if (sorted.empty()) throw Error("quantile of an empty sample");
  if (!(a > 0.0 && a < 1.0)) throw Error("quantile level must lie in (0, 1)");
  const double m = static_cast<double>(sorted.size());
  // Slack absorbs representation error in a·M, e.g. 0.95·1000.
  auto rank = static_cast<std::size_t>(std::ceil(a * m - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

double CalibrationReport::quantile(double a) const {
  return nearest_rank_quantile(divergences, a);
}

CalibrationReport calibrate_delta(const CovarianceEstimate& ce, double alpha,
                                  std::int64_t replicates, std::uint64_t seed,
                                  unsigned workers) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
  if (replicates < 100) throw Error("calibration needs at least 100 replicates");

  const Eigen::MatrixXd chol = cholesky_factor(ce.sigma_hat());
  const std::int64_t max_discard = replicates / 100;
  std::vector<ReplicateResult> results(static_cast<std::size_t>(replicates));

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(
      std::min<std::int64_t>(workers, replicates));
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::int64_t k = w; k < replicates; k += workers) {
          results[static_cast<std::size_t>(k)] =
              run_replicate(ce, chol, seed, k, max_discard + 1);
        }
      });
    }
  }

  CalibrationReport report;
  report.alpha = alpha;
  report.replicates = replicates;
  report.seed = seed;
  report.divergences.reserve(results.size());
  for (const auto& r : results) {
    report.discarded += r.discarded;
    report.divergences.push_back(r.divergence);
  }
  if (report.discarded > max_discard) {
    std::ostringstream os;
    os << "calibration discarded " << report.discarded << " of " << replicates
       << " replicates as singular (N = " << ce.n_samples()
       << ", m = " << ce.dim() << ")";
    throw SingularCovariance(os.str());
  }
  std::sort(report.divergences.begin(), report.divergences.end());
  report.delta_alpha = report.quantile(alpha);
  report.delta_max = delta_max(ce.sigma_hat());
  report.exceeded_delta_max = report.delta_alpha >= report.delta_max;
  return report;
}

}  // namespace lvgm
