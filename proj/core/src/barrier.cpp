#include "barrier.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "pfenergy/error.hpp"

namespace pfenergy::detail {

using linalg::Matrix;
using linalg::SymMatrix;
using linalg::Vector;

namespace {

using Local = std::array<std::array<double, 2>, 2>;

// Per-line data for the L-dependent part. Local index 0 is the `from` bus,
// 1 the `to` bus; pos[r] < 0 marks a fixed-voltage endpoint.
struct EdgeTerm {
  std::array<std::ptrdiff_t, 2> pos;
  std::array<std::ptrdiff_t, 4> slot;  // rho_from, rho_to, theta_from, theta_to
  Local cu, cy, cuu, cuy, cyy;
};

// d u / d(local var) and d y / d(local var) for u = rho_to - rho_from,
// y = theta_from - theta_to.
constexpr std::array<double, 4> kDu{-1.0, 1.0, 0.0, 0.0};
constexpr std::array<double, 4> kDy{0.0, 0.0, 1.0, -1.0};

Local scaled(const Local& k, double f) {
  return {{{f * k[0][0], f * k[0][1]}, {f * k[1][0], f * k[1][1]}}};
}

double trace_wp(const Matrix& w, const EdgeTerm& e, const Local& p) {
  double t = 0.0;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      if (e.pos[r] >= 0 && e.pos[c] >= 0) t += w(e.pos[r], e.pos[c]) * p[c][r];
  return t;
}

// tr(W P W Q) with P local to edge a and Q local to edge b.
double trace_wpwq(const Matrix& w, const EdgeTerm& a, const Local& p, const EdgeTerm& b, const Local& q) {
  double t = 0.0;
  for (int r = 0; r < 2; ++r) {
    if (a.pos[r] < 0) continue;
    for (int c = 0; c < 2; ++c) {
      if (a.pos[c] < 0 || p[r][c] == 0.0) continue;
      for (int s = 0; s < 2; ++s) {
        if (b.pos[s] < 0) continue;
        for (int v = 0; v < 2; ++v) {
          if (b.pos[v] < 0) continue;
          t += w(b.pos[v], a.pos[r]) * p[r][c] * w(a.pos[c], b.pos[s]) * q[s][v];
        }
      }
    }
  }
  return t;
}

// Adds phi(z) = -log(h - z) - log(h + z) for the scalar z = coef . local vars.
void add_interval(double z, double h, const std::array<std::ptrdiff_t, 4>& slot, const std::array<double, 4>& coef,
                  BarrierEval& out, Matrix& hess) {
  const double a = h - z, b = h + z;
  out.value += -std::log(a) - std::log(b);
  const double d1 = 1.0 / a - 1.0 / b;
  const double d2 = 1.0 / (a * a) + 1.0 / (b * b);
  for (int r = 0; r < 4; ++r) {
    if (slot[r] < 0 || coef[r] == 0.0) continue;
    out.grad[slot[r]] += coef[r] * d1;
    for (int c = 0; c < 4; ++c)
      if (slot[c] >= 0 && coef[c] != 0.0) hess(slot[r], slot[c]) += coef[r] * coef[c] * d2;
  }
}

}  // namespace

DomainBarrier::DomainBarrier(const Network& net, std::optional<PhaseVoltageBox> box) : net_(net), box_(box) {
  if (box_) {
    if (!(box_->b_rho > 1.0) || !(box_->b_theta > 0.0) || !(box_->b_theta < std::numbers::pi / 2))
      throw Error(ErrorCode::InvalidArgument, "operational box needs b_rho > 1 and 0 < b_theta < pi/2");
    log_ratio_ = std::log(box_->b_rho);
  }
}

double DomainBarrier::box_margin(const PFState& s) const {
  if (!box_) return std::numeric_limits<double>::infinity();
  double m = std::numeric_limits<double>::infinity();
  for (const auto& e : net_.edges()) {
    m = std::min(m, box_->b_theta - std::abs(s.theta[e.from] - s.theta[e.to]));
    m = std::min(m, log_ratio_ - std::abs(s.rho[e.from] - s.rho[e.to]));
  }
  return m;
}

bool DomainBarrier::feasible(const PFState& s) const { return value(s).has_value(); }

std::optional<double> DomainBarrier::value(const PFState& s) const {
  if (!phases_in_range(net_, s) || !(box_margin(s) > 0.0)) return std::nullopt;
  double v = 0.0;
  for (const auto& e : net_.edges()) v -= std::log(std::cos(s.theta[e.from] - s.theta[e.to]));
  if (!net_.pq_buses().empty()) {
    const auto chol = linalg::Cholesky::factor(convexity_matrix(net_, s));
    if (!chol) return std::nullopt;
    v -= chol->log_det();
  }
  if (box_) {
    for (const auto& e : net_.edges()) {
      const double y = s.theta[e.from] - s.theta[e.to];
      const double u = s.rho[e.to] - s.rho[e.from];
      v -= std::log(box_->b_theta - y) + std::log(box_->b_theta + y);
      v -= std::log(log_ratio_ - u) + std::log(log_ratio_ + u);
    }
  }
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

BarrierEval DomainBarrier::evaluate(const PFState& s) const {
  const std::size_t n = net_.dimension();
  BarrierEval out;
  out.grad.assign(n, 0.0);
  Matrix hess(n, n);

  std::vector<EdgeTerm> terms;
  for (const auto& e : net_.edges()) {
    const std::array<std::ptrdiff_t, 4> slot{net_.rho_slot(e.from), net_.rho_slot(e.to), net_.theta_slot(e.from),
                                             net_.theta_slot(e.to)};
    const double y = s.theta[e.from] - s.theta[e.to];
    const double sec = 1.0 / std::cos(y);
    const double tn = std::tan(y);

    // -log cos y
    out.value -= std::log(std::cos(y));
    for (int r = 2; r < 4; ++r) {
      if (slot[r] < 0) continue;
      out.grad[slot[r]] += kDy[r] * tn;
      for (int c = 2; c < 4; ++c)
        if (slot[c] >= 0) hess(slot[r], slot[c]) += kDy[r] * kDy[c] * sec * sec;
    }

    if (box_) {
      add_interval(y, box_->b_theta, slot, kDy, out, hess);
      add_interval(s.rho[e.to] - s.rho[e.from], log_ratio_, slot, kDu, out, hess);
    }

    const auto pi = net_.pq_position(e.from), pj = net_.pq_position(e.to);
    if (pi < 0 && pj < 0) continue;
    const double u = s.rho[e.to] - s.rho[e.from];
    const double eu = std::exp(u), emu = std::exp(-u);
    const Local k{{{eu, 1.0}, {1.0, emu}}};
    const Local ku{{{eu, 0.0}, {0.0, -emu}}};
    const Local kuu{{{eu, 0.0}, {0.0, emu}}};
    const double f = -e.b * sec;
    EdgeTerm t;
    t.pos = {pi, pj};
    t.slot = slot;
    t.cu = scaled(ku, f);
    t.cy = scaled(k, f * tn);
    t.cuu = scaled(kuu, f);
    t.cuy = scaled(ku, f * tn);
    t.cyy = scaled(k, f * (2.0 * sec * sec - 1.0));
    terms.push_back(t);
  }

  if (!terms.empty()) {
    const auto chol = linalg::Cholesky::factor(convexity_matrix(net_, s));
    if (!chol) throw Error(ErrorCode::NumericalFailure, "barrier evaluated outside the domain");
    out.value -= chol->log_det();
    const Matrix w = chol->inverse().to_dense();

    for (const auto& a : terms) {
      const double gu = -trace_wp(w, a, a.cu);
      const double gy = -trace_wp(w, a, a.cy);
      const double huu = -trace_wp(w, a, a.cuu);
      const double huy = -trace_wp(w, a, a.cuy);
      const double hyy = -trace_wp(w, a, a.cyy);
      for (int r = 0; r < 4; ++r) {
        if (a.slot[r] < 0) continue;
        out.grad[a.slot[r]] += kDu[r] * gu + kDy[r] * gy;
        for (int c = 0; c < 4; ++c) {
          if (a.slot[c] < 0) continue;
          hess(a.slot[r], a.slot[c]) +=
              kDu[r] * kDu[c] * huu + (kDu[r] * kDy[c] + kDy[r] * kDu[c]) * huy + kDy[r] * kDy[c] * hyy;
        }
      }
    }
    for (const auto& a : terms) {
      for (const auto& b : terms) {
        const double tuu = trace_wpwq(w, a, a.cu, b, b.cu);
        const double tuy = trace_wpwq(w, a, a.cu, b, b.cy);
        const double tyu = trace_wpwq(w, a, a.cy, b, b.cu);
        const double tyy = trace_wpwq(w, a, a.cy, b, b.cy);
        for (int r = 0; r < 4; ++r) {
          if (a.slot[r] < 0) continue;
          for (int c = 0; c < 4; ++c) {
            if (b.slot[c] < 0) continue;
            hess(a.slot[r], b.slot[c]) += kDu[r] * (tuu * kDu[c] + tuy * kDy[c]) + kDy[r] * (tyu * kDu[c] + tyy * kDy[c]);
          }
        }
      }
    }
  }
  out.hess = SymMatrix::from_dense(hess);
  return out;
}

}  // namespace pfenergy::detail
