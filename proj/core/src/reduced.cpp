#include "pfenergy/reduced.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "pfenergy/convexity.hpp"
#include "pfenergy/error.hpp"
#include "pfenergy/finite_difference.hpp"
#include "reduced_common.hpp"

namespace pfenergy {

using linalg::Matrix;
using linalg::Vector;

namespace detail {

void check_reactive_inputs(const Network& net, const Vector& theta) {
  if (!net.has_unit_setpoints())
    throw Error(ErrorCode::InvalidArgument, "voltage set-points must be 1; absorb them into the line susceptances");
  if (theta.size() != net.bus_count()) throw Error(ErrorCode::InvalidArgument, "one phase per bus is required");
  for (const auto& e : net.edges())
    if (!(std::abs(theta[e.from] - theta[e.to]) < std::numbers::pi / 2))
      throw Error(ErrorCode::PhaseOutOfRange, "a line phase difference reaches pi/2");
}

}  // namespace detail

namespace {

Vector reactive_mismatch(const Network& net, const Vector& rho, const Vector& theta) {
  Vector r;
  for (std::size_t i : net.pq_buses()) {
    double q = 0.0;
    for (const auto& a : net.adjacent(i))
      q += net.edges()[a.edge].b * (std::exp(2.0 * rho[i]) -
                                    std::exp(rho[i] + rho[a.neighbor]) * std::cos(theta[i] - theta[a.neighbor]));
    r.push_back(net.buses()[i].q_inj - q);
  }
  return r;
}

Matrix reactive_jacobian(const Network& net, const Vector& rho, const Vector& theta) {
  const std::size_t n = net.pq_buses().size();
  Matrix j(n, n);
  for (std::size_t a = 0; a < n; ++a) {
    const std::size_t i = net.pq_buses()[a];
    for (const auto& adj : net.adjacent(i)) {
      const double b = net.edges()[adj.edge].b;
      const double ec = std::exp(rho[i] + rho[adj.neighbor]) * std::cos(theta[i] - theta[adj.neighbor]);
      j(a, a) += b * (2.0 * std::exp(2.0 * rho[i]) - ec);
      const auto p = net.pq_position(adj.neighbor);
      if (p >= 0) j(a, p) -= b * ec;
    }
  }
  return j;
}

Vector bus_theta(const Network& net, const Vector& angles) {
  Vector theta(net.bus_count(), 0.0);
  for (std::size_t k = 0; k < net.angle_buses().size(); ++k) theta[net.angle_buses()[k]] = angles[k];
  return theta;
}

PFState reduced_state(const Network& net, const Vector& rho_pq, const Vector& theta) {
  PFState s = PFState::flat(net);
  s.theta = theta;
  for (std::size_t a = 0; a < rho_pq.size(); ++a) s.rho[net.pq_buses()[a]] = rho_pq[a];
  return s;
}

}  // namespace

Vector solve_reactive_newton(const Network& net, const Vector& theta, double tol, std::size_t max_iter,
                             const Vector* rho0) {
  detail::check_reactive_inputs(net, theta);
  const std::size_t n = net.pq_buses().size();
  Vector rho(net.bus_count(), 0.0);
  if (rho0) {
    if (rho0->size() != n) throw Error(ErrorCode::InvalidArgument, "initial rho must be indexed over PQ buses");
    for (std::size_t a = 0; a < n; ++a) rho[net.pq_buses()[a]] = (*rho0)[a];
  }
  Vector r = reactive_mismatch(net, rho, theta);
  double norm = linalg::norm_inf(r);
  for (std::size_t it = 0; it < max_iter && norm > tol; ++it) {
    const auto step = linalg::solve_lu(reactive_jacobian(net, rho, theta), r);
    if (!step) break;
    bool accepted = false;
    double t = 1.0;
    for (int k = 0; k < 40; ++k, t *= 0.5) {
      Vector trial = rho;
      for (std::size_t a = 0; a < n; ++a) trial[net.pq_buses()[a]] += t * (*step)[a];
      Vector rt = reactive_mismatch(net, trial, theta);
      const double nt = linalg::norm_inf(rt);
      if (std::isfinite(nt) && nt < norm) {
        rho = std::move(trial);
        r = std::move(rt);
        norm = nt;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (!(norm <= tol)) throw Error(ErrorCode::NoReactiveSolution, "reactive Newton did not converge");
  Vector out(n);
  for (std::size_t a = 0; a < n; ++a) out[a] = rho[net.pq_buses()[a]];
  return out;
}

double reduced_energy(const Network& net, const Vector& theta) {
  const Vector rho = solve_reactive_newton(net, theta);
  return energy_value(net, reduced_state(net, rho, theta));
}

NormalizedNetwork normalize(const Network& net) {
  const auto& pq = net.pq_buses();
  std::vector<std::ptrdiff_t> fixed_pos(net.bus_count(), -1);
  std::size_t nf = 0;
  for (std::size_t i = 0; i < net.bus_count(); ++i)
    if (!net.is_pq(i)) fixed_pos[i] = static_cast<std::ptrdiff_t>(nf++);
  NormalizedNetwork out{Matrix(pq.size(), pq.size()), Matrix(pq.size(), nf), Vector(pq.size())};
  for (std::size_t a = 0; a < pq.size(); ++a) {
    const std::size_t i = pq[a];
    const double bi = net.susceptance_sum(i);
    for (const auto& adj : net.adjacent(i)) {
      const double m = net.edges()[adj.edge].b / bi;
      const auto p = net.pq_position(adj.neighbor);
      if (p >= 0)
        out.m_pq(a, p) += m;
      else
        out.m_fixed(a, fixed_pos[adj.neighbor]) += m;
    }
    out.q_tilde[a] = -net.buses()[i].q_inj / bi;
  }
  return out;
}

BetaCondition beta_from_ratios(const Vector& ratio) {
  BetaCondition out;
  out.ratio = ratio;
  double beta = 0.0;
  for (double r : ratio) beta = std::max(beta, (r - 1.0) / (r + 1.0));
  out.beta_min = beta;
  out.angle_budget_deg = std::acos(std::sqrt(beta)) * 180.0 / std::numbers::pi;
  return out;
}

BetaCondition beta_condition(const Network& net) {
  const NormalizedNetwork nn = normalize(net);
  for (std::size_t a = 0; a < nn.q_tilde.size(); ++a)
    if (!(nn.q_tilde[a] > 0.0))
      throw Error(ErrorCode::UnsupportedSign, "bus " + std::to_string(net.buses()[net.pq_buses()[a]].id) +
                                                  " does not consume reactive power");
  const VoltageBound vb = voltage_upper_bound(net);
  Vector ratio;
  for (std::size_t a = 0; a < nn.q_tilde.size(); ++a) ratio.push_back(vb.v_bar[a] * vb.v_bar[a] / nn.q_tilde[a]);
  return beta_from_ratios(ratio);
}

RegionCell region_cell(const Network& net, const Vector& angles, double fd_step) {
  RegionCell cell;
  cell.theta = angles;
  cell.reduced_min_eig = std::numeric_limits<double>::quiet_NaN();
  cell.lmi_min_eig = -std::numeric_limits<double>::infinity();
  const Vector theta = bus_theta(net, angles);
  PFState probe = PFState::flat(net);
  probe.theta = theta;
  if (!phases_in_range(net, probe)) return cell;

  Vector rho;
  try {
    rho = solve_reactive_newton(net, theta);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoReactiveSolution) throw;
    return cell;
  }
  cell.solvable = true;
  const ConvexityCertificate cert = in_domain_C(net, reduced_state(net, rho, theta));
  cell.in_C = cert.in_C;
  cell.lmi_min_eig = cert.lmi_min_eig;

  bool ok = true;
  auto reduced = [&](const Vector& a) {
    const Vector th = bus_theta(net, a);
    PFState s = PFState::flat(net);
    s.theta = th;
    if (!phases_in_range(net, s)) {
      ok = false;
      return 0.0;
    }
    try {
      const Vector r = solve_reactive_newton(net, th, 1e-12, 60, &rho);
      return energy_value(net, reduced_state(net, r, th));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoReactiveSolution) throw;
      ok = false;
      return 0.0;
    }
  };
  const auto h = numdiff::central_hessian(reduced, angles, fd_step);
  if (ok) cell.reduced_min_eig = linalg::min_eigenvalue(h);
  return cell;
}

RegionGrid region_grid(const Network& net, double step, double lo, double hi, double fd_step) {
  if (net.angle_buses().size() != 2)
    throw Error(ErrorCode::InvalidArgument, "region grid needs exactly two non-slack buses");
  if (!(step > 0.0) || !(hi >= lo)) throw Error(ErrorCode::InvalidArgument, "grid needs step > 0 and hi >= lo");
  RegionGrid grid;
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  for (std::size_t k = 0; k < count; ++k) grid.axis.push_back(lo + static_cast<double>(k) * step);
  for (double a : grid.axis)
    for (double b : grid.axis) grid.cells.push_back(region_cell(net, {a, b}, fd_step));
  return grid;
}

RegionSummary summarize_region(const RegionGrid& grid) {
  const std::size_t n = grid.axis.size();
  if (grid.cells.size() != n * n) throw Error(ErrorCode::InvalidArgument, "grid is not square");
  auto psd = [](const RegionCell& c) { return std::isfinite(c.reduced_min_eig) && c.reduced_min_eig >= 0.0; };
  auto key = [&](const RegionCell& c) { return std::array<bool, 3>{c.solvable, c.in_C, psd(c)}; };

  RegionSummary s;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const RegionCell& cell = grid.cells[r * n + c];
      if (!cell.solvable) continue;
      ++s.solvable;
      if (cell.in_C) ++s.in_C;
      if (psd(cell)) ++s.reduced_psd;
      if (!std::isfinite(cell.reduced_min_eig)) continue;
      bool band = false;
      for (int dr = -1; dr <= 1 && !band; ++dr)
        for (int dc = -1; dc <= 1 && !band; ++dc) {
          const auto rr = static_cast<std::ptrdiff_t>(r) + dr, cc = static_cast<std::ptrdiff_t>(c) + dc;
          if (rr < 0 || cc < 0 || rr >= static_cast<std::ptrdiff_t>(n) || cc >= static_cast<std::ptrdiff_t>(n)) continue;
          if (key(grid.cells[rr * n + cc]) != key(cell)) band = true;
        }
      if (band) continue;
      ++s.compared;
      if (cell.in_C == psd(cell)) ++s.agree;
    }
  }
  return s;
}

}  // namespace pfenergy
