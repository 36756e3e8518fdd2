#include "pfenergy/convexity.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "pfenergy/error.hpp"

namespace pfenergy {

using linalg::SymMatrix;

namespace {

double line_phase(const PFState& s, const Network::Edge& e) { return s.theta[e.from] - s.theta[e.to]; }

ConvexityCertificate certify(const Network& net, const PFState& s, double tol) {
  ConvexityCertificate c;
  c.phase_ok = phases_in_range(net, s);
  if (!c.phase_ok) {
    c.lmi_min_eig = -std::numeric_limits<double>::infinity();
    return c;
  }
  const SymMatrix m = convexity_matrix(net, s);
  c.lmi_tol = tol * (1.0 + m.max_abs_diagonal());
  c.lmi_min_eig = linalg::min_eigenvalue(m);
  c.in_C = c.lmi_min_eig >= -c.lmi_tol;
  return c;
}

}  // namespace

bool phases_in_range(const Network& net, const PFState& s, double margin) {
  for (const auto& e : net.edges())
    if (!(std::abs(line_phase(s, e)) < std::numbers::pi / 2 - margin)) return false;
  return true;
}

SymMatrix convexity_matrix(const Network& net, const PFState& s) {
  if (s.rho.size() != net.bus_count() || s.theta.size() != net.bus_count())
    throw Error(ErrorCode::InvalidArgument, "state size does not match the network");
  if (!phases_in_range(net, s)) throw Error(ErrorCode::PhaseOutOfRange, "a line phase difference reaches pi/2");
  const auto& pq = net.pq_buses();
  SymMatrix m(pq.size());
  for (std::size_t a = 0; a < pq.size(); ++a) m.set(a, a, 2.0 * net.susceptance_sum(pq[a]));
  for (const auto& e : net.edges()) {
    const auto pi = net.pq_position(e.from), pj = net.pq_position(e.to);
    const double sec = 1.0 / std::cos(line_phase(s, e));
    const double u = s.rho[e.to] - s.rho[e.from];
    if (pi >= 0) m.add(pi, pi, -e.b * std::exp(u) * sec);
    if (pj >= 0) m.add(pj, pj, -e.b * std::exp(-u) * sec);
    if (pi >= 0 && pj >= 0) m.add(pi, pj, -e.b * sec);
  }
  return m;
}

ConvexityCertificate in_domain_C(const Network& net, const PFState& s, double tol) { return certify(net, s, tol); }

bool in_interior_C(const Network& net, const PFState& s, double tol) {
  if (!phases_in_range(net, s, kInteriorPhaseTol)) return false;
  const SymMatrix m = convexity_matrix(net, s);
  return linalg::min_eigenvalue(m) > tol * (1.0 + m.max_abs_diagonal());
}

DomainSampleResult in_domain_D_sampled(const Network& net, const PFState& s, std::size_t samples, double tol) {
  if (samples == 0) throw Error(ErrorCode::InvalidArgument, "sample count must be positive");
  DomainSampleResult out;
  for (std::size_t k = 0; k <= samples; ++k) {
    const double alpha = static_cast<double>(k) / static_cast<double>(samples);
    PFState a = s;
    for (double& r : a.rho) r *= alpha;
    for (double& t : a.theta) t *= alpha;
    const SymMatrix h = hessian(net, a);
    out.min_eig.push_back(linalg::min_eigenvalue(h));
    if (!linalg::cholesky_psd(h, tol).psd) {
      out.in_D = false;
      out.first_failure_alpha = alpha;
      break;
    }
  }
  return out;
}

ConvexityCertificate lossy_in_domain(const Network& net, const PFState& s, double tol) {
  require_lossy_ratio(net);
  return certify(net, s, tol);
}

SymMatrix matrix_convexity_gap(double x1, double y1, double x2, double y2, double lambda) {
  auto f = [](double x, double y) {
    const double sec = 1.0 / std::cos(y);
    return SymMatrix::from_rows({{sec * std::exp(x), sec}, {sec, sec * std::exp(-x)}});
  };
  const double mu = 1.0 - lambda;
  return lambda * f(x1, y1) + mu * f(x2, y2) - f(lambda * x1 + mu * x2, lambda * y1 + mu * y2);
}

std::string_view to_string(BoundMode mode) noexcept {
  switch (mode) {
    case BoundMode::Auto: return "auto";
    case BoundMode::ExactVertices: return "exact-vertices";
    case BoundMode::Sampled: return "sampled";
  }
  return "auto";
}

}  // namespace pfenergy
