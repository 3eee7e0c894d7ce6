#include "lvgm/symcore.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace lvgm {

namespace {

std::string pd_message(Eigen::Index minor, const std::string& context) {
  std::ostringstream os;
  os << "matrix is not positive definite (leading minor " << minor + 1
     << " failed)";
  if (!context.empty()) os << ": " << context;
  return os.str();
}

// Unblocked Cholesky that reports the failing pivot. Eigen's LLT only returns
// a success flag, and the failing index is part of the error contract.
bool cholesky_in_place(Eigen::MatrixXd& a, Eigen::Index* failed) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j);
    if (j > 0) d -= a.row(j).head(j).squaredNorm();
    if (!(d > 0.0) || !std::isfinite(d)) {
      if (failed) *failed = j;
      return false;
    }
    const double ljj = std::sqrt(d);
    a(j, j) = ljj;
    if (j + 1 < n) {
      const Eigen::Index rest = n - j - 1;
      if (j > 0) {
        a.col(j).tail(rest).noalias() -=
            a.bottomLeftCorner(rest, j) * a.row(j).head(j).transpose();
      }
      a.col(j).tail(rest) /= ljj;
    }
  }
  a.triangularView<Eigen::StrictlyUpper>().setZero();
  return true;
}

}  // namespace

NotPositiveDefinite::NotPositiveDefinite(Eigen::Index minor,
                                         const std::string& context)
    : Error(pd_message(minor, context)), minor_(minor) {}

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) {
    throw DimensionMismatch("symmetric matrix must be square, got " +
                            std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()));
  }
  if (!m.allFinite()) throw Error("symmetric matrix has non-finite entries");
  m_ = m.triangularView<Eigen::Lower>();
  m_.triangularView<Eigen::StrictlyUpper>() = m_.transpose();
}

SymMatrix SymMatrix::zero(Eigen::Index dim) {
  return SymMatrix(Eigen::MatrixXd::Zero(dim, dim));
}

SymMatrix SymMatrix::identity(Eigen::Index dim) {
  return SymMatrix(Eigen::MatrixXd::Identity(dim, dim));
}

SymMatrix SymMatrix::diagonal(const Eigen::VectorXd& d) {
  return SymMatrix(Eigen::MatrixXd(d.asDiagonal()));
}

SymMatrix SymMatrix::operator+(const SymMatrix& o) const {
  if (dim() != o.dim()) throw DimensionMismatch("matrix sum: dimensions differ");
  return SymMatrix(m_ + o.m_);
}

SymMatrix SymMatrix::operator-(const SymMatrix& o) const {
  if (dim() != o.dim()) {
    throw DimensionMismatch("matrix difference: dimensions differ");
  }
  return SymMatrix(m_ - o.m_);
}

SymMatrix SymMatrix::operator*(double s) const { return SymMatrix(m_ * s); }

SymMatrix SymMatrix::operator-() const { return SymMatrix(-m_); }

double inner(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("inner: dimensions differ");
  return a.mat().cwiseProduct(b.mat()).sum();
}

Eigen::MatrixXd cholesky_factor(const SymMatrix& a) {
  Eigen::MatrixXd l = a.mat();
  Eigen::Index failed = 0;
  if (!cholesky_in_place(l, &failed)) throw NotPositiveDefinite(failed);
  return l;
}

double cholesky_logdet(const SymMatrix& a) {
  const Eigen::MatrixXd l = cholesky_factor(a);
  return 2.0 * l.diagonal().array().log().sum();
}

bool is_positive_definite(const SymMatrix& a) {
  Eigen::MatrixXd l = a.mat();
  return cholesky_in_place(l, nullptr);
}

EigenDecomposition eig_sym(const SymMatrix& a) {
  // Householder tridiagonalization followed by implicit symmetric QR.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.mat());
  return {es.eigenvalues(), es.eigenvectors()};
}

SymMatrix dd(const SymMatrix& a) {
  return SymMatrix(Eigen::MatrixXd(a.mat().diagonal().asDiagonal()));
}

SymMatrix ofd(const SymMatrix& a) {
  Eigen::MatrixXd m = a.mat();
  m.diagonal().setZero();
  return SymMatrix(m);
}

SymMatrix from_spectrum(const Eigen::VectorXd& w, const Eigen::MatrixXd& v) {
  return SymMatrix(v * w.asDiagonal() * v.transpose());
}

SymMatrix psd_project(const SymMatrix& a) {
  const auto es = eig_sym(a);
  if (es.values.size() == 0 || es.values(0) >= 0.0) return a;
  return from_spectrum(es.values.cwiseMax(0.0), es.vectors);
}

SymMatrix inverse_spd(const SymMatrix& a) {
  const Eigen::MatrixXd l = cholesky_factor(a);
  const Eigen::Index n = a.dim();
  Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(n, n);
  l.triangularView<Eigen::Lower>().solveInPlace(inv);
  l.triangularView<Eigen::Lower>().transpose().solveInPlace(inv);
  return SymMatrix(inv);
}

Eigen::MatrixXd read_csv_table(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      std::string field = line.substr(
          pos, comma == std::string::npos ? std::string::npos : comma - pos);
      const auto b = field.find_first_not_of(" \t");
      const auto e = field.find_last_not_of(" \t");
      if (b == std::string::npos) {
        throw ParseError("line " + std::to_string(lineno) + ": empty field");
      }
      field = field.substr(b, e - b + 1);
      double v = 0.0;
      const char* first = field.data();
      const char* last = field.data() + field.size();
      if (*first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last) {
        throw ParseError("line " + std::to_string(lineno) +
                         ": not a number: '" + field + "'");
      }
      row.push_back(v);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError("line " + std::to_string(lineno) + ": expected " +
                       std::to_string(rows.front().size()) + " fields, got " +
                       std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("CSV input is empty");
  Eigen::MatrixXd t(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) t(i, j) = rows[i][j];
  }
  return t;
}

Eigen::MatrixXd read_csv_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return read_csv_table(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_csv_table(std::ostream& out, const Eigen::MatrixXd& table) {
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    for (Eigen::Index j = 0; j < table.cols(); ++j) {
      if (j) out << ',';
      out << table(i, j);
    }
    out << '\n';
  }
}

void write_csv_table(const std::filesystem::path& path,
                     const Eigen::MatrixXd& table) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_csv_table(out, table);
}

SymMatrix read_sym_csv(const std::filesystem::path& path, double sym_tol) {
  const Eigen::MatrixXd t = read_csv_table(path);
  if (t.rows() != t.cols()) {
    throw ParseError(path.string() + ": matrix is not square");
  }
  if (!t.allFinite()) throw ParseError(path.string() + ": non-finite entry");
  const double scale = std::max(1.0, t.cwiseAbs().maxCoeff());
  if ((t - t.transpose()).cwiseAbs().maxCoeff() > sym_tol * scale) {
    throw ParseError(path.string() + ": matrix is not symmetric");
  }
  return SymMatrix(t);
}

std::vector<std::vector<double>> to_rows(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> rows(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    rows[i].resize(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows[i][j] = m(i, j);
  }
  return rows;
}

}  // namespace lvgm
