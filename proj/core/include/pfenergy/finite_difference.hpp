#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "pfenergy/linalg.hpp"

namespace pfenergy::numdiff {

/// Default central-difference step: 1e-5 * (1 + |x|).
inline double default_step(double x) { return 1e-5 * (1.0 + std::abs(x)); }

/// Central-difference gradient of a scalar function.
template <class F>
std::vector<double> central_gradient(F&& f, std::vector<double> x) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const double h = default_step(xi);
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    x[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Central-difference Jacobian of a gradient map, symmetrized.
template <class G>
linalg::SymMatrix central_hessian_from_gradient(G&& grad, std::vector<double> x) {
  const std::size_t n = x.size();
  linalg::Matrix jac(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const double xj = x[j];
    const double h = default_step(xj);
    x[j] = xj + h;
    const std::vector<double> gp = grad(x);
    x[j] = xj - h;
    const std::vector<double> gm = grad(x);
    x[j] = xj;
    for (std::size_t i = 0; i < n; ++i) jac(i, j) = (gp[i] - gm[i]) / (2.0 * h);
  }
  return linalg::SymMatrix::from_dense(jac);
}

/// Second differences of function values with a fixed step h.
template <class F>
linalg::SymMatrix central_hessian(F&& f, std::vector<double> x, double h) {
  const std::size_t n = x.size();
  linalg::SymMatrix hess(n);
  const double f0 = f(x);
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    x[i] = xi;
    hess.set(i, i, (fp - 2.0 * f0 + fm) / (h * h));
    for (std::size_t j = i + 1; j < n; ++j) {
      const double xj = x[j];
      x[i] = xi + h; x[j] = xj + h;
      const double fpp = f(x);
      x[j] = xj - h;
      const double fpm = f(x);
      x[i] = xi - h;
      const double fmm = f(x);
      x[j] = xj + h;
      const double fmp = f(x);
      x[i] = xi;
      x[j] = xj;
      hess.set(i, j, (fpp - fpm - fmp + fmm) / (4.0 * h * h));
    }
  }
  return hess;
}

}  // namespace pfenergy::numdiff
