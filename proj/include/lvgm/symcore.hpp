#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace lvgm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cholesky factorization failed: the matrix is not positive definite.
class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(Eigen::Index minor, const std::string& context = {});

  /// Zero-based index of the first leading minor that failed.
  Eigen::Index minor() const { return minor_; }

 private:
  Eigen::Index minor_;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

/**
 * Dense real symmetric matrix.
 *
 * The lower triangle is authoritative: every construction copies it onto the
 * upper triangle, so entry(i, j) == entry(j, i) holds bitwise. Values are
 * immutable once built; arithmetic returns new matrices.
 */
class SymMatrix {
 public:
  SymMatrix() = default;

  /// Builds from a square matrix, mirroring its lower triangle. Throws
  /// DimensionMismatch for non-square input and Error for non-finite entries.
  explicit SymMatrix(const Eigen::MatrixXd& m);

  static SymMatrix zero(Eigen::Index dim);
  static SymMatrix identity(Eigen::Index dim);
  static SymMatrix diagonal(const Eigen::VectorXd& d);

  Eigen::Index dim() const { return m_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  const Eigen::MatrixXd& mat() const { return m_; }

  /// Frobenius norm.
  double norm() const { return m_.norm(); }
  double trace() const { return m_.trace(); }

  SymMatrix operator+(const SymMatrix& o) const;
  SymMatrix operator-(const SymMatrix& o) const;
  SymMatrix operator*(double s) const;
  SymMatrix operator-() const;

  bool operator==(const SymMatrix& o) const { return m_ == o.m_; }

 private:
  Eigen::MatrixXd m_;
};

inline SymMatrix operator*(double s, const SymMatrix& a) { return a * s; }

/// ⟨A, B⟩ = tr(AᵀB), summing both mirrored off-diagonal entries.
double inner(const SymMatrix& a, const SymMatrix& b);

/// Symmetric eigendecomposition, eigenvalues ascending.
struct EigenDecomposition {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

/// Lower Cholesky factor of A; throws NotPositiveDefinite otherwise.
Eigen::MatrixXd cholesky_factor(const SymMatrix& a);

/// log|A| via Cholesky. Throws NotPositiveDefinite when A is not ≻ 0.
double cholesky_logdet(const SymMatrix& a);

/// True iff the Cholesky factorization of A succeeds.
bool is_positive_definite(const SymMatrix& a);

EigenDecomposition eig_sym(const SymMatrix& a);

/// Diagonal part.
SymMatrix dd(const SymMatrix& a);
/// Off-diagonal part (zero diagonal).
SymMatrix ofd(const SymMatrix& a);

/// Frobenius-nearest positive semidefinite matrix: eigenvalues clipped at 0.
SymMatrix psd_project(const SymMatrix& a);

/// Inverse of a positive definite matrix via its Cholesky factor.
SymMatrix inverse_spd(const SymMatrix& a);

/// V·diag(w)·Vᵀ.
SymMatrix from_spectrum(const Eigen::VectorXd& w, const Eigen::MatrixXd& v);

// Plain CSV, one row per line, comma separated, no header.
Eigen::MatrixXd read_csv_table(std::istream& in);
Eigen::MatrixXd read_csv_table(const std::filesystem::path& path);
void write_csv_table(std::ostream& out, const Eigen::MatrixXd& table);
void write_csv_table(const std::filesystem::path& path,
                     const Eigen::MatrixXd& table);

/// Reads a square CSV matrix; rejects asymmetric input beyond `sym_tol`
/// relative to the largest entry.
SymMatrix read_sym_csv(const std::filesystem::path& path,
                       double sym_tol = 1e-10);

/// Row-major nested vector view, used by the JSON writers.
std::vector<std::vector<double>> to_rows(const Eigen::MatrixXd& m);

}  // namespace lvgm
