#include <cmath>

#include "pfenergy/error.hpp"
#include "pfenergy/solver.hpp"

namespace pfenergy {

using linalg::Matrix;
using linalg::Vector;

namespace {

// Jacobian of the computed injections (P over angle buses, Q over pq buses)
// with respect to the packed variables (rho over pq, theta over non-slack).
Matrix injection_jacobian(const Network& net, const PFState& s) {
  const std::size_t n = net.bus_count();
  const std::size_t na = net.angle_buses().size();
  Vector v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = net.is_pq(i) ? std::exp(s.rho[i]) : net.buses()[i].v_set;

  std::vector<std::ptrdiff_t> prow(n, -1), qrow(n, -1);
  for (std::size_t k = 0; k < na; ++k) prow[net.angle_buses()[k]] = static_cast<std::ptrdiff_t>(k);
  for (std::size_t k = 0; k < net.pq_buses().size(); ++k)
    qrow[net.pq_buses()[k]] = static_cast<std::ptrdiff_t>(na + k);

  Matrix j(net.dimension(), net.dimension());
  auto put = [&](std::ptrdiff_t r, std::ptrdiff_t c, double val) {
    if (r >= 0 && c >= 0) j(r, c) += val;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& a : net.adjacent(i)) {
      const auto& e = net.edges()[a.edge];
      const std::size_t k = a.neighbor;
      const double y = s.theta[i] - s.theta[k];
      const double vv = v[i] * v[k];
      const double c = std::cos(y), sn = std::sin(y);
      const double vi2 = v[i] * v[i];
      // dP_i
      put(prow[i], net.rho_slot(i), e.g * (2.0 * vi2 - vv * c) + e.b * vv * sn);
      put(prow[i], net.rho_slot(k), -e.g * vv * c + e.b * vv * sn);
      put(prow[i], net.theta_slot(i), e.g * vv * sn + e.b * vv * c);
      put(prow[i], net.theta_slot(k), -e.g * vv * sn - e.b * vv * c);
      // dQ_i
      put(qrow[i], net.rho_slot(i), e.b * (2.0 * vi2 - vv * c) - e.g * vv * sn);
      put(qrow[i], net.rho_slot(k), -e.b * vv * c - e.g * vv * sn);
      put(qrow[i], net.theta_slot(i), e.b * vv * sn - e.g * vv * c);
      put(qrow[i], net.theta_slot(k), -e.b * vv * sn + e.g * vv * c);
    }
  }
  return j;
}

}  // namespace

SolveOutcome solve_newton(const Network& net, const PFState& s0, double tol, std::size_t max_iter) {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  SolveOutcome out;
  Vector x = s0.pack(net);
  PFState s = PFState::unpack(net, x);
  Vector r = physical_mismatch(net, s);
  double norm = linalg::norm_inf(r);

  auto finish = [&](SolveStatus status, std::string msg) {
    out.status = status;
    out.state = s;
    out.grad_norm = norm;
    out.message = std::move(msg);
    out.certificate = in_domain_C(net, s);
    out.energy = energy_value(net, s);
    return out;
  };

  for (std::size_t it = 0; it < max_iter; ++it) {
    if (norm <= tol) return finish(SolveStatus::SolutionFound, "");
    const auto step = linalg::solve_lu(injection_jacobian(net, s), r);
    if (!step) return finish(SolveStatus::MaxIterations, "singular Jacobian");
    double t = 1.0;
    bool accepted = false;
    for (int half = 0; half < 40; ++half, t *= 0.5) {
      Vector xt = x;
      for (std::size_t k = 0; k < x.size(); ++k) xt[k] += t * (*step)[k];
      const PFState st = PFState::unpack(net, xt);
      Vector rt = physical_mismatch(net, st);
      const double nt = linalg::norm_inf(rt);
      if (std::isfinite(nt) && nt < norm) {
        x = std::move(xt);
        s = st;
        r = std::move(rt);
        norm = nt;
        accepted = true;
        break;
      }
    }
    ++out.iterations;
    if (!accepted) {
      if (norm <= tol) break;
      return finish(SolveStatus::MaxIterations, "line search failed to reduce the mismatch");
    }
  }
  if (norm <= tol) return finish(SolveStatus::SolutionFound, "");
  return finish(SolveStatus::MaxIterations, "iteration limit reached");
}

}  // namespace pfenergy
