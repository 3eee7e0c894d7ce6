#include "lvgm/decomposition.hpp"

#include <algorithm>

namespace lvgm {

double offdiag_l1(const SymMatrix& s) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < s.dim(); ++j) {
    for (Eigen::Index i = j + 1; i < s.dim(); ++i) total += std::abs(s(i, j));
  }
  return total;
}

Support nonzero_support(const SymMatrix& s) {
  Support out;
  for (Eigen::Index i = 0; i < s.dim(); ++i) {
    for (Eigen::Index j = i + 1; j < s.dim(); ++j) {
      if (s(i, j) != 0.0) out.emplace(i, j);
    }
  }
  return out;
}

int numerical_rank(const SymMatrix& psd, double rel_tol) {
  if (psd.dim() == 0) return 0;
  const Eigen::VectorXd w = eig_sym(psd).values;
  const double top = w.maxCoeff();
  if (!(top > 0.0)) return 0;
  return static_cast<int>((w.array() > rel_tol * top).count());
}

Eigen::VectorXd descending_eigenvalues(const SymMatrix& a) {
  return eig_sym(a).values.reverse();
}

Eigen::MatrixXd support_pattern(Eigen::Index dim, const Support& support) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(dim, dim);
  for (const auto& [i, j] : support) {
    p(i, j) = 1.0;
    p(j, i) = 1.0;
  }
  return p;
}

}  // namespace lvgm
