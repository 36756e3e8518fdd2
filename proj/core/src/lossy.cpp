#include <cmath>

#include "energy_model.hpp"
#include "pfenergy/energy.hpp"
#include "pfenergy/error.hpp"

namespace pfenergy {

using linalg::Vector;

double require_lossy_ratio(const Network& net) {
  const auto kappa = net.lossy_ratio();
  if (!kappa) throw Error(ErrorCode::NotConstantRatio, "g/b differs between lines");
  // At kappa = 0 the lossy model is the lossless one, which handles PV buses.
  if (*kappa != 0.0 && !net.all_non_slack_pq())
    throw Error(ErrorCode::UnsupportedTopology, "lossy energy with kappa != 0 requires every non-slack bus to be PQ");
  return *kappa;
}

double lossy_energy_value(const Network& net, const PFState& s) {
  return detail::model_value(net, detail::lossy_model(net, require_lossy_ratio(net)), s);
}

Vector lossy_residuals(const Network& net, const PFState& s) {
  return detail::model_residuals(net, detail::lossy_model(net, require_lossy_ratio(net)), s);
}

EnergyEval lossy_energy_gradient(const Network& net, const PFState& s) {
  return detail::model_gradient(net, detail::lossy_model(net, require_lossy_ratio(net)), s);
}

linalg::SymMatrix lossy_hessian(const Network& net, const PFState& s) {
  return detail::model_hessian(net, detail::lossy_model(net, require_lossy_ratio(net)), s);
}

Vector physical_mismatch(const Network& net, const PFState& s) {
  detail::check_state(net, s);
  const std::size_t n = net.bus_count();
  Vector v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = net.is_pq(i) ? std::exp(s.rho[i]) : net.buses()[i].v_set;
  Vector p(n, 0.0), q(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double vi = v[i];
    for (const auto& a : net.adjacent(i)) {
      const auto& e = net.edges()[a.edge];
      const double vj = v[a.neighbor];
      const double y = s.theta[i] - s.theta[a.neighbor];
      const double c = vi * vi - vi * vj * std::cos(y);
      const double sn = vi * vj * std::sin(y);
      p[i] += e.g * c + e.b * sn;
      q[i] += e.b * c - e.g * sn;
    }
  }
  Vector r;
  for (std::size_t i : net.angle_buses()) r.push_back(net.buses()[i].p_inj - p[i]);
  for (std::size_t i : net.pq_buses()) r.push_back(net.buses()[i].q_inj - q[i]);
  return r;
}

}  // namespace pfenergy
