#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "pfenergy/linalg.hpp"
#include "pfenergy/network.hpp"

namespace pfenergy {

/// Log-voltage and phase at every bus. Pinned entries (rho at PV/slack, theta
/// at the slack) are stored but are not free variables; they are expected to
/// be zero.
struct PFState {
  linalg::Vector rho;
  linalg::Vector theta;

  static PFState flat(const Network& net);
  /// Free variables in the network's layout: (rho over pq, theta over non-slack).
  linalg::Vector pack(const Network& net) const;
  static PFState unpack(const Network& net, std::span<const double> x);
  /// V_i = exp(rho_i).
  linalg::Vector voltages() const;
};

struct EnergyEval {
  double value = 0.0;
  linalg::Vector grad_theta;  // over net.angle_buses()
  linalg::Vector grad_rho;    // over net.pq_buses()

  /// Gradient in the packed variable layout (rho first, then theta).
  linalg::Vector packed() const;
};

/// Energy of a lossless network; conductances are ignored.
double energy_value(const Network& net, const PFState& s);

/// Active mismatches over net.angle_buses() followed by reactive mismatches
/// over net.pq_buses(). Computed bus by bus, independently of the gradient.
linalg::Vector pf_residuals(const Network& net, const PFState& s);

EnergyEval energy_gradient(const Network& net, const PFState& s);

/// Hessian over the packed variable layout.
linalg::SymMatrix hessian(const Network& net, const PFState& s);

/// Hessian blocks with edge variables theta_k = theta_from - theta_to, edges in
/// net.edges() order.
struct HessianBlocks {
  linalg::SymMatrix M;               // pq x pq
  linalg::Matrix N;                  // pq x edges
  linalg::Vector R;                  // diagonal, one entry per edge
  linalg::Vector theta_edges;
  std::optional<linalg::SymMatrix> O;  // M - N R^-1 N^T
  std::optional<linalg::SymMatrix> L;  // diag(e^-rho) O diag(e^-rho)
};

/// Throws SingularReduction if an edge has |theta_k| >= pi/2; use
/// `allow_singular` to get M, N, R with O and L left empty instead.
HessianBlocks hessian_blocks(const Network& net, const PFState& s, bool allow_singular = false);

// Constant-ratio lossy networks (g = kappa b on every line; no PV buses unless
// kappa = 0).
// The active and reactive equations are combined as
//   (P - kappa Q) = (1 + kappa^2) sum b e^{rho_i+rho_j} sin theta_ij
//   (kappa P + Q) = (1 + kappa^2) sum b (e^{2 rho_i} - e^{rho_i+rho_j} cos theta_ij)
// which are exactly the gradient conditions of the lossy energy.
// All lossy functions throw UnsupportedTopology when kappa != 0 and a PV bus
// is present, and NotConstantRatio when g/b is not uniform.

double lossy_energy_value(const Network& net, const PFState& s);
/// Combined residuals, same ordering as pf_residuals.
linalg::Vector lossy_residuals(const Network& net, const PFState& s);
EnergyEval lossy_energy_gradient(const Network& net, const PFState& s);
linalg::SymMatrix lossy_hessian(const Network& net, const PFState& s);
/// Uncombined injection mismatches P_i - P_i(V, theta), Q_i - Q_i(V, theta)
/// with the full (g, b) line model; same ordering as pf_residuals. Voltages
/// at PV and slack buses are taken from their set-points, not from `s.rho`.
/// Valid for any network (no ratio or topology requirement).
linalg::Vector physical_mismatch(const Network& net, const PFState& s);

/// Returns kappa. Throws NotConstantRatio when g/b varies, and
/// UnsupportedTopology when kappa != 0 and some non-slack bus is not PQ.
double require_lossy_ratio(const Network& net);

}  // namespace pfenergy
