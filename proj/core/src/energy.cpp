#include "pfenergy/energy.hpp"

#include <cmath>
#include <numbers>

#include "energy_model.hpp"
#include "pfenergy/error.hpp"

namespace pfenergy {

using linalg::SymMatrix;
using linalg::Vector;

PFState PFState::flat(const Network& net) {
  return {Vector(net.bus_count(), 0.0), Vector(net.bus_count(), 0.0)};
}

Vector PFState::pack(const Network& net) const {
  detail::check_state(net, *this);
  Vector x;
  x.reserve(net.dimension());
  for (std::size_t i : net.pq_buses()) x.push_back(rho[i]);
  for (std::size_t i : net.angle_buses()) x.push_back(theta[i]);
  return x;
}

PFState PFState::unpack(const Network& net, std::span<const double> x) {
  if (x.size() != net.dimension())
    throw Error(ErrorCode::InvalidArgument, "packed state has " + std::to_string(x.size()) +
                                                " entries, expected " + std::to_string(net.dimension()));
  PFState s = flat(net);
  std::size_t k = 0;
  for (std::size_t i : net.pq_buses()) s.rho[i] = x[k++];
  for (std::size_t i : net.angle_buses()) s.theta[i] = x[k++];
  return s;
}

Vector PFState::voltages() const {
  Vector v(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) v[i] = std::exp(rho[i]);
  return v;
}

Vector EnergyEval::packed() const {
  Vector g = grad_rho;
  g.insert(g.end(), grad_theta.begin(), grad_theta.end());
  return g;
}

namespace detail {

EnergyModel lossless_model(const Network& net) {
  EnergyModel m;
  for (const Bus& b : net.buses()) {
    m.p_lin.push_back(b.p_inj);
    m.q_lin.push_back(b.q_inj);
  }
  return m;
}

EnergyModel lossy_model(const Network& net, double kappa) {
  EnergyModel m;
  for (const Bus& b : net.buses()) {
    m.p_lin.push_back(b.p_inj - kappa * b.q_inj);
    m.q_lin.push_back(kappa * b.p_inj + b.q_inj);
  }
  m.scale = 1.0 + kappa * kappa;
  return m;
}

void check_state(const Network& net, const PFState& s) {
  if (s.rho.size() != net.bus_count() || s.theta.size() != net.bus_count())
    throw Error(ErrorCode::InvalidArgument, "state size does not match the network");
}

double model_value(const Network& net, const EnergyModel& m, const PFState& s) {
  check_state(net, s);
  double linear = 0.0;
  for (std::size_t i : net.angle_buses()) linear -= m.p_lin[i] * s.theta[i];
  for (std::size_t i : net.pq_buses()) linear -= m.q_lin[i] * s.rho[i];
  double lines = 0.0;
  for (const auto& e : net.edges()) {
    const double ri = s.rho[e.from], rj = s.rho[e.to];
    lines += e.b * (0.5 * (std::exp(2.0 * ri) + std::exp(2.0 * rj)) -
                    std::exp(ri + rj) * std::cos(s.theta[e.from] - s.theta[e.to]));
  }
  return linear + m.scale * lines;
}

Vector model_residuals(const Network& net, const EnergyModel& m, const PFState& s) {
  check_state(net, s);
  Vector r;
  r.reserve(net.dimension());
  for (std::size_t i : net.angle_buses()) {
    double flow = 0.0;
    for (const auto& a : net.adjacent(i)) {
      const std::size_t j = a.neighbor;
      flow += net.edges()[a.edge].b * std::exp(s.rho[i] + s.rho[j]) * std::sin(s.theta[i] - s.theta[j]);
    }
    r.push_back(m.p_lin[i] - m.scale * flow);
  }
  for (std::size_t i : net.pq_buses()) {
    double flow = 0.0;
    for (const auto& a : net.adjacent(i)) {
      const std::size_t j = a.neighbor;
      flow += net.edges()[a.edge].b *
              (std::exp(2.0 * s.rho[i]) - std::exp(s.rho[i] + s.rho[j]) * std::cos(s.theta[i] - s.theta[j]));
    }
    r.push_back(m.q_lin[i] - m.scale * flow);
  }
  return r;
}

EnergyEval model_gradient(const Network& net, const EnergyModel& m, const PFState& s) {
  check_state(net, s);
  const std::size_t n = net.bus_count();
  Vector gt(n, 0.0), gr(n, 0.0);
  for (const auto& e : net.edges()) {
    const double ri = s.rho[e.from], rj = s.rho[e.to];
    const double y = s.theta[e.from] - s.theta[e.to];
    const double ex = std::exp(ri + rj);
    const double sn = m.scale * e.b * ex * std::sin(y);
    const double cs = m.scale * e.b * ex * std::cos(y);
    gt[e.from] += sn;
    gt[e.to] -= sn;
    gr[e.from] += m.scale * e.b * std::exp(2.0 * ri) - cs;
    gr[e.to] += m.scale * e.b * std::exp(2.0 * rj) - cs;
  }
  EnergyEval out;
  out.value = model_value(net, m, s);
  for (std::size_t i : net.angle_buses()) out.grad_theta.push_back(gt[i] - m.p_lin[i]);
  for (std::size_t i : net.pq_buses()) out.grad_rho.push_back(gr[i] - m.q_lin[i]);
  return out;
}

SymMatrix model_hessian(const Network& net, const EnergyModel& m, const PFState& s) {
  check_state(net, s);
  SymMatrix h(net.dimension());
  for (const auto& e : net.edges()) {
    const std::size_t i = e.from, j = e.to;
    const double ex = std::exp(s.rho[i] + s.rho[j]);
    const double y = s.theta[i] - s.theta[j];
    const double bc = m.scale * e.b * ex * std::cos(y);
    const double bs = m.scale * e.b * ex * std::sin(y);
    const auto ti = net.theta_slot(i), tj = net.theta_slot(j);
    const auto ri = net.rho_slot(i), rj = net.rho_slot(j);

    if (ti >= 0) h.add(ti, ti, bc);
    if (tj >= 0) h.add(tj, tj, bc);
    if (ti >= 0 && tj >= 0) h.add(ti, tj, -bc);

    if (ri >= 0) h.add(ri, ri, 2.0 * m.scale * e.b * std::exp(2.0 * s.rho[i]) - bc);
    if (rj >= 0) h.add(rj, rj, 2.0 * m.scale * e.b * std::exp(2.0 * s.rho[j]) - bc);
    if (ri >= 0 && rj >= 0) h.add(ri, rj, -bc);

    if (ri >= 0 && ti >= 0) h.add(ri, ti, bs);
    if (ri >= 0 && tj >= 0) h.add(ri, tj, -bs);
    if (rj >= 0 && ti >= 0) h.add(rj, ti, bs);
    if (rj >= 0 && tj >= 0) h.add(rj, tj, -bs);
  }
  return h;
}

}  // namespace detail

double energy_value(const Network& net, const PFState& s) {
  return detail::model_value(net, detail::lossless_model(net), s);
}

Vector pf_residuals(const Network& net, const PFState& s) {
  return detail::model_residuals(net, detail::lossless_model(net), s);
}

EnergyEval energy_gradient(const Network& net, const PFState& s) {
  return detail::model_gradient(net, detail::lossless_model(net), s);
}

SymMatrix hessian(const Network& net, const PFState& s) {
  return detail::model_hessian(net, detail::lossless_model(net), s);
}

HessianBlocks hessian_blocks(const Network& net, const PFState& s, bool allow_singular) {
  detail::check_state(net, s);
  const std::size_t npq = net.pq_buses().size();
  const std::size_t ne = net.edges().size();
  HessianBlocks hb{SymMatrix(npq), linalg::Matrix(npq, ne), Vector(ne), Vector(ne), std::nullopt, std::nullopt};

  bool singular = false;
  for (std::size_t k = 0; k < ne; ++k) {
    const auto& e = net.edges()[k];
    const std::size_t i = e.from, j = e.to;
    const double ex = std::exp(s.rho[i] + s.rho[j]);
    const double y = s.theta[i] - s.theta[j];
    hb.theta_edges[k] = y;
    hb.R[k] = e.b * ex * std::cos(y);
    if (std::abs(y) >= std::numbers::pi / 2) singular = true;
    const double bs = e.b * ex * std::sin(y);
    const auto pi = net.pq_position(i), pj = net.pq_position(j);
    if (pi >= 0) {
      hb.N(pi, k) = bs;
      hb.M.add(pi, pi, 2.0 * e.b * std::exp(2.0 * s.rho[i]) - hb.R[k]);
    }
    if (pj >= 0) {
      hb.N(pj, k) = bs;
      hb.M.add(pj, pj, 2.0 * e.b * std::exp(2.0 * s.rho[j]) - hb.R[k]);
    }
    if (pi >= 0 && pj >= 0) hb.M.add(pi, pj, -hb.R[k]);
  }
  if (singular) {
    if (allow_singular) return hb;
    throw Error(ErrorCode::SingularReduction, "an edge phase difference reaches pi/2");
  }

  SymMatrix o = hb.M;
  for (std::size_t k = 0; k < ne; ++k) {
    const auto& e = net.edges()[k];
    const auto pi = net.pq_position(e.from), pj = net.pq_position(e.to);
    const double inv = 1.0 / hb.R[k];
    if (pi >= 0) o.add(pi, pi, -hb.N(pi, k) * hb.N(pi, k) * inv);
    if (pj >= 0) o.add(pj, pj, -hb.N(pj, k) * hb.N(pj, k) * inv);
    if (pi >= 0 && pj >= 0) o.add(pi, pj, -hb.N(pi, k) * hb.N(pj, k) * inv);
  }
  SymMatrix l(npq);
  for (std::size_t a = 0; a < npq; ++a)
    for (std::size_t b = a; b < npq; ++b)
      l.set(a, b, o(a, b) * std::exp(-s.rho[net.pq_buses()[a]]) * std::exp(-s.rho[net.pq_buses()[b]]));
  hb.O = std::move(o);
  hb.L = std::move(l);
  return hb;
}

}  // namespace pfenergy
