#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

namespace pfenergy::linalg {

using Vector = std::vector<double>;

/// Relative PSD tolerance: pivots/eigenvalues down to -tol * (1 + max|diag|)
/// count as nonnegative.
inline constexpr double kDefaultPsdTol = 1e-9;

/// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> data() const noexcept { return data_; }

  Matrix transposed() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Square matrix whose storage cannot become asymmetric: every write to (i, j)
/// also writes (j, i).
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t order) : n_(order), data_(order * order, 0.0) {}

  static SymMatrix identity(std::size_t order);
  static SymMatrix diagonal(std::span<const double> diag);
  /// Throws InvalidMatrix unless rows form an exactly symmetric square matrix.
  static SymMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  /// Symmetrizes (A + A^T) / 2; throws InvalidMatrix if `m` is not square.
  static SymMatrix from_dense(const Matrix& m);

  std::size_t order() const noexcept { return n_; }
  bool empty() const noexcept { return n_ == 0; }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double v) {
    data_[i * n_ + j] = v;
    data_[j * n_ + i] = v;
  }
  /// Adds v to (i, j) and, off the diagonal, to (j, i).
  void add(std::size_t i, std::size_t j, double v) {
    data_[i * n_ + j] += v;
    if (i != j) data_[j * n_ + i] += v;
  }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }

  double max_abs() const;
  double max_abs_diagonal() const;
  bool all_finite() const;

  SymMatrix& operator+=(const SymMatrix& other);
  SymMatrix& operator-=(const SymMatrix& other);
  SymMatrix& operator*=(double s);

  Matrix to_dense() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

SymMatrix operator+(SymMatrix a, const SymMatrix& b);
SymMatrix operator-(SymMatrix a, const SymMatrix& b);
SymMatrix operator*(double s, SymMatrix a);

struct PsdVerdict {
  bool psd = false;
  double min_pivot = 0.0;
};

/// Symmetric-pivoted LDL^T. `psd` is true iff every pivot is at least
/// -tol * (1 + max|diag|). Throws InvalidMatrix on non-finite input.
PsdVerdict cholesky_psd(const SymMatrix& m, double tol = kDefaultPsdTol);

struct SymEigen {
  Vector values;   // ascending
  Matrix vectors;  // column k pairs with values[k]
};

/// Cyclic Jacobi rotations. Throws NumericalFailure if the sweep cap is hit.
SymEigen sym_eigen(const SymMatrix& m);
/// Eigenvalues only (same algorithm, skips accumulating rotations).
Vector sym_eigenvalues(const SymMatrix& m);
double min_eigenvalue(const SymMatrix& m);

/// Cholesky factor L with m = L L^T.
class Cholesky {
 public:
  /// nullopt when a pivot is not strictly positive (relative to the diagonal).
  static std::optional<Cholesky> factor(const SymMatrix& m);

  std::size_t order() const noexcept { return n_; }
  Vector solve(std::span<const double> rhs) const;
  double log_det() const;
  SymMatrix inverse() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> l_;  // row-major lower triangle, full storage
};

/// Solves m x = rhs for symmetric positive definite m. Throws
/// NotPositiveDefinite when the factorization breaks down.
Vector solve_spd(const SymMatrix& m, std::span<const double> rhs);

/// Gaussian elimination with partial pivoting for a general square system.
/// nullopt when a pivot falls below 1e-14 times the largest row magnitude.
std::optional<Vector> solve_lu(Matrix m, std::span<const double> rhs);

Vector multiply(const SymMatrix& m, std::span<const double> x);
Vector multiply(const Matrix& m, std::span<const double> x);
Matrix multiply(const Matrix& a, const Matrix& b);
double dot(std::span<const double> a, std::span<const double> b);
/// Largest magnitude; NaN if any entry is NaN.
double norm_inf(std::span<const double> v);
double norm2(std::span<const double> v);

}  // namespace pfenergy::linalg
