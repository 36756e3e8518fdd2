#pragma once

// Log-barrier for the convexity domain (and an optional operational box) over
// the packed variables:
//   Phi = -sum_lines log cos theta_ij - log det L(rho, theta) + box terms.
// -log det L is convex because L is concave in the Loewner order.

#include <optional>

#include "pfenergy/convexity.hpp"
#include "pfenergy/linalg.hpp"
#include "pfenergy/network.hpp"

namespace pfenergy::detail {

struct BarrierEval {
  double value = 0.0;
  linalg::Vector grad;
  linalg::SymMatrix hess;
};

class DomainBarrier {
 public:
  DomainBarrier(const Network& net, std::optional<PhaseVoltageBox> box);

  /// Strictly feasible: phases below pi/2, L positive definite, inside the box.
  bool feasible(const PFState& s) const;
  /// nullopt when infeasible.
  std::optional<double> value(const PFState& s) const;
  /// Requires feasible(s).
  BarrierEval evaluate(const PFState& s) const;

  /// Smallest distance from the box faces (theta in radians, voltage ratio in
  /// log units); +inf without a box.
  double box_margin(const PFState& s) const;

 private:
  const Network& net_;
  std::optional<PhaseVoltageBox> box_;
  double log_ratio_ = 0.0;
};

}  // namespace pfenergy::detail
