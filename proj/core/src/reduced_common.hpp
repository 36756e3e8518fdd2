#pragma once

#include <vector>

#include "pfenergy/linalg.hpp"
#include "pfenergy/network.hpp"

namespace pfenergy::detail {

/// Unit set-points, per-bus phase vector of the right size, phases in range.
void check_reactive_inputs(const Network& net, const linalg::Vector& theta);

/// Reactive constraints in zeta = V^2 over pq buses:
///   g_i = B_i zeta_i - sum_{pq j} w_ij sqrt(zeta_i zeta_j) - (sum_{fixed j} w_ij) sqrt(zeta_i) + Qcons_i
/// with w_ij = b_ij cos theta_ij (or b_ij when unit_cosines).
struct ZetaProblem {
  struct Pair {
    std::size_t i, j;
    double w;
  };

  ZetaProblem(const Network& net, const linalg::Vector& theta, bool unit_cosines);

  linalg::Vector g(const linalg::Vector& zeta) const;
  linalg::Matrix jacobian(const linalg::Vector& zeta) const;
  /// h += sum_i weight_i * Hessian(g_i).
  void add_constraint_hessians(const linalg::Vector& zeta, const linalg::Vector& weight, linalg::Matrix& h) const;

  std::size_t n;
  linalg::Vector b_sum;
  linalg::Vector q_cons;
  linalg::Vector fixed_weight;
  std::vector<Pair> pairs;
};

}  // namespace pfenergy::detail
