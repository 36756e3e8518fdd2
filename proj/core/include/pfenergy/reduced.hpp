#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "pfenergy/energy.hpp"
#include "pfenergy/linalg.hpp"
#include "pfenergy/network.hpp"

namespace pfenergy {

// Reactive-power subproblem: phases are given, PQ voltage magnitudes are
// unknown. All functions here need unit voltage set-points (InvalidArgument
// otherwise) and |theta_i - theta_j| < pi/2 on every line (PhaseOutOfRange).
// Phases are passed per bus; the slack entry must be 0.

/// Newton on the reactive mismatches in rho with theta fixed, from rho = 0
/// (or `rho0`, indexed over pq buses). Returns rho over net.pq_buses().
/// Throws NoReactiveSolution when it fails to reach `tol`.
linalg::Vector solve_reactive_newton(const Network& net, const linalg::Vector& theta, double tol = 1e-10,
                                     std::size_t max_iter = 60, const linalg::Vector* rho0 = nullptr);

/// Energy at (rho*(theta), theta).
double reduced_energy(const Network& net, const linalg::Vector& theta);

struct ReducedState {
  linalg::Vector zeta;   // over pq buses, V^2
  linalg::Vector V;      // sqrt(zeta)
  linalg::Vector theta;  // per bus
  /// g_i(zeta) = B_i zeta_i - sum_j b_ij sqrt(zeta_i zeta_j) cos theta_ij + Qcons_i; <= 0 when feasible.
  linalg::Vector slack;
  /// V_i > 2 Qcons_i / sum over fixed-voltage neighbors of b_ij cos theta_ij (+1e-9);
  /// false as well when bus i has no fixed-voltage neighbor.
  std::vector<bool> lower_bound_ok;
};

/// Maximizes c . zeta subject to g_i(zeta) <= 0 (zeta = 1 at fixed-voltage
/// buses) with a two-phase log-barrier method followed by a Newton polish of
/// g(zeta) = 0. Weights are per pq bus, nonnegative and not all zero.
/// Throws UnsupportedSign if some PQ bus does not consume reactive power and
/// NoReactiveSolution if the constraints are infeasible.
ReducedState convex_reactive_solve(const Network& net, const linalg::Vector& theta, const linalg::Vector& c);

struct VoltageBound {
  linalg::Vector v_bar;  // over pq buses
};

/// V-bar_i = sqrt(max zeta_i) over the constraints with every cosine set to 1.
VoltageBound voltage_upper_bound(const Network& net);

/// Row-normalized susceptances and normalized reactive consumption.
struct NormalizedNetwork {
  linalg::Matrix m_pq;     // pq x pq, b_ij / B_i
  linalg::Matrix m_fixed;  // pq x fixed-voltage buses (pv and slack, in bus order)
  linalg::Vector q_tilde;  // Qcons_i / B_i over pq buses
};
NormalizedNetwork normalize(const Network& net);

struct BetaCondition {
  double beta_min = 0.0;          // clamped below at 0
  double angle_budget_deg = 90.0;  // arccos(sqrt(beta_min))
  linalg::Vector ratio;            // V-bar_i^2 / Q-tilde_i over pq buses
};

/// Smallest beta with V-bar_i <= sqrt((1+beta)/(1-beta)) sqrt(Q-tilde_i) at every
/// pq bus. Throws UnsupportedSign when some Q-tilde_i <= 0.
BetaCondition beta_condition(const Network& net);
/// The same rearrangement for given ratios V-bar_i^2 / Q-tilde_i.
BetaCondition beta_from_ratios(const linalg::Vector& ratio);

struct RegionCell {
  linalg::Vector theta;  // over net.angle_buses()
  bool solvable = false;
  bool in_C = false;
  double lmi_min_eig = 0.0;
  /// Smallest eigenvalue of the finite-difference Hessian of the reduced
  /// energy; NaN when a stencil point has no reactive solution.
  double reduced_min_eig = 0.0;
};

struct RegionGrid {
  linalg::Vector axis;            // grid values shared by both phase axes
  std::vector<RegionCell> cells;  // first angle bus outer, second inner
};

/// Evaluates one phase vector (over angle buses).
RegionCell region_cell(const Network& net, const linalg::Vector& angles, double fd_step = 1e-4);

/// Grid over [lo, hi]^2 for networks with exactly two non-slack buses
/// (InvalidArgument otherwise).
RegionGrid region_grid(const Network& net, double step, double lo, double hi, double fd_step = 1e-4);

struct RegionSummary {
  std::size_t solvable = 0;
  std::size_t in_C = 0;
  std::size_t reduced_psd = 0;
  std::size_t compared = 0;  // solvable cells outside the boundary band
  std::size_t agree = 0;
  double agreement() const { return compared ? static_cast<double>(agree) / static_cast<double>(compared) : 1.0; }
};

/// Agreement between in_C and reduced_min_eig >= 0. A cell is in the boundary
/// band (and not compared) when any of its 8 neighbors differs from it in
/// either classification or in solvability.
RegionSummary summarize_region(const RegionGrid& grid);

}  // namespace pfenergy
