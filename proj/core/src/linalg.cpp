#include "pfenergy/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pfenergy/error.hpp"

namespace pfenergy::linalg {

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

SymMatrix SymMatrix::identity(std::size_t order) {
  SymMatrix m(order);
  for (std::size_t i = 0; i < order; ++i) m.set(i, i, 1.0);
  return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
  SymMatrix m(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m.set(i, i, diag[i]);
  return m;
}

SymMatrix SymMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n = rows.size();
  SymMatrix m(n);
  std::size_t i = 0;
  for (const auto& r : rows) {
    if (r.size() != n) throw Error(ErrorCode::InvalidMatrix, "matrix is not square");
    std::size_t j = 0;
    for (double v : r) m.data_[i * n + j++] = v;
    ++i;
  }
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (m(a, b) != m(b, a)) throw Error(ErrorCode::InvalidMatrix, "matrix is not symmetric");
  return m;
}

SymMatrix SymMatrix::from_dense(const Matrix& d) {
  if (d.rows() != d.cols()) throw Error(ErrorCode::InvalidMatrix, "matrix is not square");
  SymMatrix m(d.rows());
  for (std::size_t i = 0; i < d.rows(); ++i)
    for (std::size_t j = i; j < d.cols(); ++j) m.set(i, j, 0.5 * (d(i, j) + d(j, i)));
  return m;
}

double SymMatrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double SymMatrix::max_abs_diagonal() const {
  double m = 0.0;
  for (std::size_t i = 0; i < n_; ++i) m = std::max(m, std::abs((*this)(i, i)));
  return m;
}

bool SymMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& other) {
  if (other.n_ != n_) throw Error(ErrorCode::InvalidMatrix, "order mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& other) {
  if (other.n_ != n_) throw Error(ErrorCode::InvalidMatrix, "order mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix SymMatrix::to_dense() const {
  Matrix d(n_, n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) d(i, j) = (*this)(i, j);
  return d;
}

SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
SymMatrix operator*(double s, SymMatrix a) { return a *= s; }

PsdVerdict cholesky_psd(const SymMatrix& m, double tol) {
  if (!m.all_finite()) throw Error(ErrorCode::InvalidMatrix, "non-finite entry");
  if (tol < 0.0) throw Error(ErrorCode::InvalidArgument, "negative PSD tolerance");
  const std::size_t n = m.order();
  if (n == 0) return {true, std::numeric_limits<double>::infinity()};

  const double threshold = tol * (1.0 + m.max_abs_diagonal());
  Matrix a = m.to_dense();
  double min_pivot = std::numeric_limits<double>::infinity();

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (a(i, i) > a(p, p)) p = i;
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
      for (std::size_t i = 0; i < n; ++i) std::swap(a(i, k), a(i, p));
    }
    const double d = a(k, k);
    if (d < -threshold) return {false, std::min(min_pivot, d)};
    if (d <= threshold) {
      // Largest remaining diagonal is numerically zero: the trailing block is
      // PSD only if it vanishes.
      double smallest_diag = d;
      double largest_off = 0.0;
      for (std::size_t i = k; i < n; ++i) {
        smallest_diag = std::min(smallest_diag, a(i, i));
        for (std::size_t j = i + 1; j < n; ++j) largest_off = std::max(largest_off, std::abs(a(i, j)));
      }
      min_pivot = std::min(min_pivot, smallest_diag);
      return {smallest_diag >= -threshold && largest_off <= threshold, min_pivot};
    }
    min_pivot = std::min(min_pivot, d);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double lik = a(i, k) / d;
      if (lik == 0.0) continue;
      for (std::size_t j = k + 1; j <= i; ++j) {
        a(i, j) -= lik * a(j, k);
        a(j, i) = a(i, j);
      }
    }
  }
  return {true, min_pivot};
}

namespace {

// Cyclic Jacobi on a dense working copy; `v` accumulates rotations when non-null.
Vector jacobi(Matrix a, Matrix* v) {
  const std::size_t n = a.rows();
  constexpr int kMaxSweeps = 100;
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(a(i, j)));

  for (int sweep = 0;; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off == 0.0 || std::sqrt(off) <= 1e-300 + 1e-17 * scale) break;
    if (sweep == kMaxSweeps)
      throw Error(ErrorCode::NumericalFailure, "Jacobi eigensolver did not converge");

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        const double g = 100.0 * std::abs(apq);
        if (sweep > 3 && std::abs(app) + g == std::abs(app) && std::abs(aqq) + g == std::abs(aqq)) {
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          continue;
        }
        const double theta = 0.5 * (aqq - app) / apq;
        double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        if (v != nullptr) {
          for (std::size_t k = 0; k < n; ++k) {
            const double vkp = (*v)(k, p);
            const double vkq = (*v)(k, q);
            (*v)(k, p) = c * vkp - s * vkq;
            (*v)(k, q) = s * vkp + c * vkq;
          }
        }
      }
    }
  }
  Vector values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = a(i, i);
  return values;
}

void check_finite(const SymMatrix& m) {
  if (!m.all_finite()) throw Error(ErrorCode::InvalidMatrix, "non-finite entry");
}

}  // namespace

SymEigen sym_eigen(const SymMatrix& m) {
  check_finite(m);
  const std::size_t n = m.order();
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;
  Vector raw = jacobi(m.to_dense(), &v);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return raw[a] < raw[b]; });

  SymEigen out{Vector(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = raw[order[k]];
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

Vector sym_eigenvalues(const SymMatrix& m) {
  check_finite(m);
  Vector values = jacobi(m.to_dense(), nullptr);
  std::sort(values.begin(), values.end());
  return values;
}

double min_eigenvalue(const SymMatrix& m) {
  if (m.empty()) return std::numeric_limits<double>::infinity();
  return sym_eigenvalues(m).front();
}

std::optional<Cholesky> Cholesky::factor(const SymMatrix& m) {
  const std::size_t n = m.order();
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * m.max_abs_diagonal();
  Cholesky c;
  c.n_ = n;
  c.l_.assign(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double d = m(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= c.l_[j * n + k] * c.l_[j * n + k];
    if (!(d > floor) || !std::isfinite(d)) return std::nullopt;
    const double ljj = std::sqrt(d);
    c.l_[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m(i, j);
      const double* li = &c.l_[i * n];
      const double* lj = &c.l_[j * n];
      for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
      c.l_[i * n + j] = s / ljj;
    }
  }
  return c;
}

Vector Cholesky::solve(std::span<const double> rhs) const {
  if (rhs.size() != n_) throw Error(ErrorCode::InvalidArgument, "dimension mismatch in Cholesky::solve");
  Vector y(rhs.begin(), rhs.end());
  for (std::size_t i = 0; i < n_; ++i) {
    double s = y[i];
    for (std::size_t k = 0; k < i; ++k) s -= l_[i * n_ + k] * y[k];
    y[i] = s / l_[i * n_ + i];
  }
  for (std::size_t ii = n_; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n_; ++k) s -= l_[k * n_ + ii] * y[k];
    y[ii] = s / l_[ii * n_ + ii];
  }
  return y;
}

double Cholesky::log_det() const {
  double s = 0.0;
  for (std::size_t i = 0; i < n_; ++i) s += std::log(l_[i * n_ + i]);
  return 2.0 * s;
}

SymMatrix Cholesky::inverse() const {
  SymMatrix inv(n_);
  Vector e(n_, 0.0);
  for (std::size_t j = 0; j < n_; ++j) {
    std::fill(e.begin(), e.end(), 0.0);
    e[j] = 1.0;
    Vector col = solve(e);
    for (std::size_t i = j; i < n_; ++i) inv.set(i, j, col[i]);
  }
  return inv;
}

Vector solve_spd(const SymMatrix& m, std::span<const double> rhs) {
  check_finite(m);
  if (rhs.size() != m.order()) throw Error(ErrorCode::InvalidArgument, "dimension mismatch in solve_spd");
  auto chol = Cholesky::factor(m);
  if (!chol) throw Error(ErrorCode::NotPositiveDefinite, "matrix is not positive definite");
  return chol->solve(rhs);
}

std::optional<Vector> solve_lu(Matrix m, std::span<const double> rhs) {
  const std::size_t n = m.rows();
  if (m.cols() != n || rhs.size() != n) throw Error(ErrorCode::InvalidArgument, "dimension mismatch in solve_lu");
  Vector b(rhs.begin(), rhs.end());
  double scale = 0.0;
  for (double x : m.data()) scale = std::max(scale, std::abs(x));
  if (!std::isfinite(scale)) throw Error(ErrorCode::InvalidMatrix, "non-finite entry");
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(m(i, k)) > std::abs(m(p, k))) p = i;
    if (std::abs(m(p, k)) <= 1e-14 * scale) return std::nullopt;
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(p, j));
      std::swap(b[k], b[p]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = m(i, k) / m(k, k);
      if (f == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) m(i, j) -= f * m(k, j);
      b[i] -= f * b[k];
    }
  }
  for (std::size_t k = n; k-- > 0;) {
    double s = b[k];
    for (std::size_t j = k + 1; j < n; ++j) s -= m(k, j) * b[j];
    b[k] = s / m(k, k);
  }
  return b;
}

Vector multiply(const SymMatrix& m, std::span<const double> x) {
  const std::size_t n = m.order();
  Vector y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = m.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += r[j] * x[j];
    y[i] = s;
  }
  return y;
}

Vector multiply(const Matrix& m, std::span<const double> x) {
  Vector y(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) s += r[j] * x[j];
    y[i] = s;
  }
  return y;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw Error(ErrorCode::InvalidArgument, "dimension mismatch in multiply");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_inf(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) {
    if (std::isnan(x)) return x;
    m = std::max(m, std::abs(x));
  }
  return m;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

}  // namespace pfenergy::linalg
