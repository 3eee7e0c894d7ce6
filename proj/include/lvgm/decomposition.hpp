#pragma once

#include <set>
#include <utility>

#include "lvgm/symcore.hpp"

namespace lvgm {

/// Unordered off-diagonal index pair, stored with first < second.
using IndexPair = std::pair<Eigen::Index, Eigen::Index>;
using Support = std::set<IndexPair>;

/// Sparse plus low-rank split X = S − L of a concentration matrix.
struct Decomposition {
  SymMatrix S;
  SymMatrix L;
  SymMatrix X;
  Support support;
  int rank_L = 0;
  /// X⁻¹, the identified covariance.
  SymMatrix sigma_m;
};

/// h₁(S) = Σ_{i<j} |S_ij|.
double offdiag_l1(const SymMatrix& s);

/// Off-diagonal pairs (i < j) with S_ij != 0.
Support nonzero_support(const SymMatrix& s);

/// Number of eigenvalues above rel_tol·max(max eigenvalue, 0).
int numerical_rank(const SymMatrix& psd, double rel_tol = 1e-8);

/// Descending eigenvalues.
Eigen::VectorXd descending_eigenvalues(const SymMatrix& a);

/// 0/1 matrix marking the diagonal and every pair of `support`.
Eigen::MatrixXd support_pattern(Eigen::Index dim, const Support& support);

}  // namespace lvgm
