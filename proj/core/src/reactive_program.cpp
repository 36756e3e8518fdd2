#include <cmath>
#include <functional>
#include <limits>

#include "pfenergy/convexity.hpp"
#include "pfenergy/error.hpp"
#include "pfenergy/reduced.hpp"
#include "reduced_common.hpp"

namespace pfenergy {

using linalg::Matrix;
using linalg::SymMatrix;
using linalg::Vector;

namespace detail {

ZetaProblem::ZetaProblem(const Network& net, const Vector& theta, bool unit_cosines) : n(net.pq_buses().size()) {
  check_reactive_inputs(net, theta);
  b_sum.resize(n);
  q_cons.resize(n);
  for (std::size_t a = 0; a < n; ++a) {
    const std::size_t i = net.pq_buses()[a];
    b_sum[a] = net.susceptance_sum(i);
    q_cons[a] = -net.buses()[i].q_inj;
    if (q_cons[a] < 0.0)
      throw Error(ErrorCode::UnsupportedSign,
                  "bus " + std::to_string(net.buses()[i].id) + " injects reactive power; consumption must be >= 0");
  }
  fixed_weight.assign(n, 0.0);
  for (const auto& e : net.edges()) {
    const double w = e.b * (unit_cosines ? 1.0 : std::cos(theta[e.from] - theta[e.to]));
    const auto pi = net.pq_position(e.from), pj = net.pq_position(e.to);
    if (pi >= 0 && pj >= 0)
      pairs.push_back({static_cast<std::size_t>(pi), static_cast<std::size_t>(pj), w});
    else if (pi >= 0)
      fixed_weight[pi] += w;
    else if (pj >= 0)
      fixed_weight[pj] += w;
  }
}

Vector ZetaProblem::g(const Vector& z) const {
  Vector out(n);
  for (std::size_t a = 0; a < n; ++a) out[a] = b_sum[a] * z[a] - fixed_weight[a] * std::sqrt(z[a]) + q_cons[a];
  for (const auto& p : pairs) {
    const double r = p.w * std::sqrt(z[p.i] * z[p.j]);
    out[p.i] -= r;
    out[p.j] -= r;
  }
  return out;
}

Matrix ZetaProblem::jacobian(const Vector& z) const {
  Matrix j(n, n);
  for (std::size_t a = 0; a < n; ++a) j(a, a) = b_sum[a] - 0.5 * fixed_weight[a] / std::sqrt(z[a]);
  for (const auto& p : pairs) {
    const double si = std::sqrt(z[p.i]), sj = std::sqrt(z[p.j]);
    j(p.i, p.i) -= 0.5 * p.w * sj / si;
    j(p.i, p.j) -= 0.5 * p.w * si / sj;
    j(p.j, p.j) -= 0.5 * p.w * si / sj;
    j(p.j, p.i) -= 0.5 * p.w * sj / si;
  }
  return j;
}

void ZetaProblem::add_constraint_hessians(const Vector& z, const Vector& weight, Matrix& h) const {
  for (std::size_t a = 0; a < n; ++a) h(a, a) += weight[a] * 0.25 * fixed_weight[a] * std::pow(z[a], -1.5);
  for (const auto& p : pairs) {
    const double zi = z[p.i], zj = z[p.j];
    const double f = 0.25 * p.w * (weight[p.i] + weight[p.j]);
    h(p.i, p.i) += f * std::sqrt(zj) * std::pow(zi, -1.5);
    h(p.j, p.j) += f * std::sqrt(zi) * std::pow(zj, -1.5);
    h(p.i, p.j) -= f / std::sqrt(zi * zj);
    h(p.j, p.i) -= f / std::sqrt(zi * zj);
  }
}

}  // namespace detail

namespace {

// Damped Newton on a smooth convex function with an implicit domain.
struct Smooth {
  std::function<std::optional<double>(const Vector&)> value;
  std::function<void(const Vector&, Vector&, SymMatrix&)> derivatives;
};

// Returns false if the line search could not make progress.
bool minimize(const Smooth& f, Vector& x, std::size_t max_iter, const std::function<bool(const Vector&)>& stop) {
  auto fx = f.value(x);
  if (!fx) throw Error(ErrorCode::NumericalFailure, "barrier start is outside the domain");
  for (std::size_t it = 0; it < max_iter; ++it) {
    if (stop && stop(x)) return true;
    Vector g;
    SymMatrix h;
    f.derivatives(x, g, h);
    Vector rhs(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) rhs[i] = -g[i];
    auto chol = linalg::Cholesky::factor(h);
    double tau = 1e-12 * (1.0 + h.max_abs_diagonal());
    while (!chol && tau < 1e12) {
      SymMatrix shifted = h;
      for (std::size_t i = 0; i < h.order(); ++i) shifted.add(i, i, tau);
      chol = linalg::Cholesky::factor(shifted);
      tau *= 10.0;
    }
    if (!chol) return false;
    const Vector d = chol->solve(rhs);
    const double slope = linalg::dot(g, d);
    if (-slope <= 1e-14 * (1.0 + std::abs(*fx))) return true;
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      Vector xt = x;
      for (std::size_t i = 0; i < x.size(); ++i) xt[i] += t * d[i];
      const auto ft = f.value(xt);
      if (ft && *ft <= *fx + 1e-4 * t * slope) {
        x = std::move(xt);
        fx = ft;
        accepted = true;
        break;
      }
    }
    if (!accepted) return -slope <= 1e-9 * (1.0 + std::abs(*fx));
  }
  return true;
}

// Barrier terms -sum log h_i with h_i = shift - g_i(zeta). Returns nullopt
// outside the domain.
std::optional<double> log_barrier(const detail::ZetaProblem& p, const Vector& z, double shift) {
  for (double v : z)
    if (!(v > 0.0)) return std::nullopt;
  const Vector g = p.g(z);
  double s = 0.0;
  for (double gi : g) {
    const double h = shift - gi;
    if (!(h > 0.0)) return std::nullopt;
    s -= std::log(h);
  }
  return s;
}

// Gradient and Hessian of -sum log(shift - g_i) over zeta, plus the mixed
// terms with the shift variable when `with_shift` is set (shift is the last
// coordinate).
void barrier_derivatives(const detail::ZetaProblem& p, const Vector& z, double shift, bool with_shift, Vector& grad,
                         SymMatrix& hess) {
  const std::size_t n = p.n;
  const std::size_t m = with_shift ? n + 1 : n;
  const Vector g = p.g(z);
  const Matrix jac = p.jacobian(z);
  Matrix h(m, m);
  grad.assign(m, 0.0);
  Vector inv(n);
  for (std::size_t i = 0; i < n; ++i) inv[i] = 1.0 / (shift - g[i]);
  for (std::size_t i = 0; i < n; ++i) {
    // grad phi_i = (grad g_i, -1) / h_i
    for (std::size_t a = 0; a < n; ++a) grad[a] += jac(i, a) * inv[i];
    if (with_shift) grad[n] -= inv[i];
    const double w2 = inv[i] * inv[i];
    for (std::size_t a = 0; a < n; ++a) {
      if (jac(i, a) == 0.0) continue;
      for (std::size_t b = 0; b < n; ++b) h(a, b) += w2 * jac(i, a) * jac(i, b);
      if (with_shift) {
        h(a, n) -= w2 * jac(i, a);
        h(n, a) -= w2 * jac(i, a);
      }
    }
    if (with_shift) h(n, n) += w2;
  }
  Matrix hz(n, n);
  p.add_constraint_hessians(z, inv, hz);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) h(a, b) += hz(a, b);
  hess = SymMatrix::from_dense(h);
}

// Strictly feasible zeta (every g_i < 0) by minimizing the largest constraint.
Vector phase_one(const detail::ZetaProblem& p) {
  const std::size_t n = p.n;
  Vector x(n + 1, 1.0);
  double gmax = -std::numeric_limits<double>::infinity();
  for (double gi : p.g(Vector(n, 1.0))) gmax = std::max(gmax, gi);
  if (gmax < 0.0) return Vector(n, 1.0);
  x[n] = gmax + 1.0;

  auto split = [n](const Vector& v) { return Vector(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n)); };
  for (double t = 1.0; t < 1e14; t *= 10.0) {
    Smooth f;
    f.value = [&](const Vector& v) -> std::optional<double> {
      const auto b = log_barrier(p, split(v), v[n]);
      if (!b) return std::nullopt;
      return t * v[n] + *b;
    };
    f.derivatives = [&](const Vector& v, Vector& g, SymMatrix& h) {
      barrier_derivatives(p, split(v), v[n], true, g, h);
      g[n] += t;
    };
    minimize(f, x, 200, [&](const Vector& v) { return v[n] < 0.0; });
    if (x[n] < 0.0) return split(x);
  }
  throw Error(ErrorCode::NoReactiveSolution, "reactive constraints are infeasible at these phases");
}

Vector maximize_weighted(const detail::ZetaProblem& p, const Vector& c) {
  Vector z = phase_one(p);
  const double m = static_cast<double>(p.n);
  for (double t = 1.0;; t *= 10.0) {
    Smooth f;
    f.value = [&](const Vector& v) -> std::optional<double> {
      const auto b = log_barrier(p, v, 0.0);
      if (!b) return std::nullopt;
      return -t * linalg::dot(c, v) + *b;
    };
    f.derivatives = [&](const Vector& v, Vector& g, SymMatrix& h) {
      barrier_derivatives(p, v, 0.0, false, g, h);
      for (std::size_t a = 0; a < p.n; ++a) g[a] -= t * c[a];
    };
    minimize(f, z, 200, {});
    if (m / t <= 1e-12 * (1.0 + std::abs(linalg::dot(c, z)))) break;
  }
  // The optimum makes every constraint tight; finish with Newton on g = 0.
  Vector best = z;
  double best_norm = linalg::norm_inf(p.g(z));
  for (int it = 0; it < 30 && best_norm > 1e-14; ++it) {
    const auto step = linalg::solve_lu(p.jacobian(z), p.g(z));
    if (!step) break;
    Vector zn = z;
    for (std::size_t a = 0; a < p.n; ++a) zn[a] -= (*step)[a];
    bool positive = true;
    for (double v : zn) positive = positive && v > 0.0;
    if (!positive) break;
    const double nn = linalg::norm_inf(p.g(zn));
    z = zn;
    if (nn < best_norm) {
      best = z;
      best_norm = nn;
    } else if (nn > 10.0 * best_norm) {
      break;
    }
  }
  return best;
}

}  // namespace

ReducedState convex_reactive_solve(const Network& net, const Vector& theta, const Vector& c) {
  const detail::ZetaProblem p(net, theta, false);
  if (c.size() != p.n) throw Error(ErrorCode::InvalidArgument, "one weight per PQ bus is required");
  double total = 0.0;
  for (double ci : c) {
    if (!(ci >= 0.0) || !std::isfinite(ci)) throw Error(ErrorCode::InvalidArgument, "weights must be nonnegative");
    total += ci;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidArgument, "weights must not all be zero");

  ReducedState out;
  out.theta = theta;
  out.zeta = p.n ? maximize_weighted(p, c) : Vector{};
  out.slack = p.g(out.zeta);
  for (std::size_t a = 0; a < p.n; ++a) {
    out.V.push_back(std::sqrt(out.zeta[a]));
    const double denom = p.fixed_weight[a];
    out.lower_bound_ok.push_back(denom > 0.0 && out.V[a] > 2.0 * p.q_cons[a] / denom + 1e-9);
  }
  return out;
}

VoltageBound voltage_upper_bound(const Network& net) {
  const detail::ZetaProblem p(net, Vector(net.bus_count(), 0.0), true);
  VoltageBound out;
  for (std::size_t a = 0; a < p.n; ++a) {
    Vector c(p.n, 0.0);
    c[a] = 1.0;
    out.v_bar.push_back(std::sqrt(maximize_weighted(p, c)[a]));
  }
  return out;
}

}  // namespace pfenergy
