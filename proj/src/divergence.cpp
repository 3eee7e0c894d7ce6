#include "lvgm/divergence.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace lvgm {

namespace {

void check_same_dim(const SymMatrix& a, const SymMatrix& b, const char* op) {
  if (a.dim() != b.dim()) {
    std::ostringstream os;
    os << op << ": dimension " << a.dim() << " vs " << b.dim();
    throw DimensionMismatch(os.str());
  }
}

// tr(A⁻¹B) from the Cholesky factor of A.
double trace_inv_times(const Eigen::MatrixXd& chol_a, const SymMatrix& b) {
  Eigen::MatrixXd y = b.mat();
  chol_a.triangularView<Eigen::Lower>().solveInPlace(y);
  chol_a.triangularView<Eigen::Lower>().transpose().solveInPlace(y);
  return y.trace();
}

double logdet_from_factor(const Eigen::MatrixXd& l) {
  return 2.0 * l.diagonal().array().log().sum();
}

}  // namespace

CovarianceEstimate::CovarianceEstimate(SymMatrix sigma_hat,
                                       std::int64_t n_samples)
    : sigma_hat_(std::move(sigma_hat)), n_samples_(n_samples) {
  if (n_samples_ < 2) throw Error("covariance estimate needs N >= 2 samples");
  logdet_ = cholesky_logdet(sigma_hat_);
}

ProblemSpec::ProblemSpec(double gamma, double delta)
    : gamma_(gamma), delta_(delta) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw Error("gamma must be positive");
  }
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw Error("delta must be positive");
  }
}

ProblemSpec::ProblemSpec(double gamma, double delta,
                         const CovarianceEstimate& ce)
    : ProblemSpec(gamma, delta) {
  const double dmax = delta_max(ce.sigma_hat());
  if (dmax <= 1e-12) {
    throw InfeasibleSpec(
        "sample covariance is diagonal (delta_max = 0): no admissible delta");
  }
  if (delta >= dmax) {
    std::ostringstream os;
    os.precision(10);
    os << "delta = " << delta << " is not below delta_max = " << dmax;
    throw InfeasibleSpec(os.str());
  }
}

double kl2(const SymMatrix& sigma_hat, const SymMatrix& sigma) {
  check_same_dim(sigma_hat, sigma, "kl2");
  const double logdet_hat = cholesky_logdet(sigma_hat);
  const Eigen::MatrixXd l = cholesky_factor(sigma);
  return logdet_from_factor(l) - logdet_hat + trace_inv_times(l, sigma_hat) -
         static_cast<double>(sigma.dim());
}

double kl2_of_X(const SymMatrix& sigma_hat, const SymMatrix& x) {
  check_same_dim(sigma_hat, x, "kl2_of_X");
  const double logdet_x = cholesky_logdet(x);
  const double logdet_hat = cholesky_logdet(sigma_hat);
  return -logdet_x - logdet_hat + inner(x, sigma_hat) -
         static_cast<double>(x.dim());
}

double delta_max(const SymMatrix& sigma_hat) {
  const double logdet_hat = cholesky_logdet(sigma_hat);
  const double logdet_diag = sigma_hat.mat().diagonal().array().log().sum();
  return logdet_diag - logdet_hat;
}

double nll(const SymMatrix& sigma_hat, std::int64_t n_samples,
           const SymMatrix& sigma) {
  check_same_dim(sigma_hat, sigma, "nll");
  const Eigen::MatrixXd l = cholesky_factor(sigma);
  const double m = static_cast<double>(sigma.dim());
  return 0.5 * static_cast<double>(n_samples) *
         (logdet_from_factor(l) + trace_inv_times(l, sigma_hat) +
          m * std::log(2.0 * std::numbers::pi));
}

double delta_to_nll_bound(const CovarianceEstimate& ce, double delta) {
  if (!(delta > 0.0)) throw Error("delta must be positive");
  const double m = static_cast<double>(ce.dim());
  return 0.5 * static_cast<double>(ce.n_samples()) *
         (delta + ce.logdet() + m + m * std::log(2.0 * std::numbers::pi));
}

}  // namespace lvgm
