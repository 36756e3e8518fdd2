#pragma once

// Shared evaluation of the energy family
//   E = -sum p_lin theta - sum q_lin rho
//       + scale * sum_edges b ((e^{2 rho_i} + e^{2 rho_j}) / 2 - e^{rho_i+rho_j} cos theta_ij)
// The lossless energy is (P, Q, 1); the constant-ratio lossy energy is
// (P - kappa Q, kappa P + Q, 1 + kappa^2).

#include "pfenergy/energy.hpp"

namespace pfenergy::detail {

struct EnergyModel {
  linalg::Vector p_lin;  // per bus
  linalg::Vector q_lin;  // per bus
  double scale = 1.0;
};

EnergyModel lossless_model(const Network& net);
EnergyModel lossy_model(const Network& net, double kappa);

void check_state(const Network& net, const PFState& s);

double model_value(const Network& net, const EnergyModel& m, const PFState& s);
linalg::Vector model_residuals(const Network& net, const EnergyModel& m, const PFState& s);
EnergyEval model_gradient(const Network& net, const EnergyModel& m, const PFState& s);
linalg::SymMatrix model_hessian(const Network& net, const EnergyModel& m, const PFState& s);

}  // namespace pfenergy::detail
