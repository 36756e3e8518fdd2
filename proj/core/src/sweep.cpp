#include <cmath>

#include "pfenergy/error.hpp"
#include "pfenergy/solver.hpp"

namespace pfenergy {

std::vector<double> kappa_range(double kappa_min, double kappa_max, double step) {
  if (!(step > 0.0) || !(kappa_max >= kappa_min))
    throw Error(ErrorCode::InvalidArgument, "kappa range needs step > 0 and max >= min");
  std::vector<double> grid;
  for (std::size_t k = 0;; ++k) {
    const double v = kappa_min + static_cast<double>(k) * step;
    if (v > kappa_max + step * 1e-6) break;
    grid.push_back(v);
  }
  return grid;
}

std::vector<SweepRecord> sweep_load(const Network& net, double delta, const std::vector<double>& kappa_grid,
                                    const BarrierOptions& opts) {
  std::vector<SweepRecord> rows;
  std::optional<PFState> warm;
  for (double kappa : kappa_grid) {
    const Network scaled = scale_injections(net, kappa, delta * kappa);
    SweepRecord rec;
    rec.kappa = kappa;
    rec.delta = delta;
    rec.warm_started = warm.has_value();
    const SolveOutcome o = solve_convex(scaled, warm ? *warm : PFState::flat(net), opts);
    rec.status = o.status;
    rec.grad_norm = o.grad_norm;
    rec.lmi_min_eig = o.certificate.lmi_min_eig;
    rec.boundary_active = o.boundary_active;
    rec.iterations = o.iterations;
    rec.state = o.state;
    if (o.status == SolveStatus::SolutionFound)
      warm = o.state;
    else
      warm.reset();
    rows.push_back(std::move(rec));
  }
  return rows;
}

}  // namespace pfenergy
