#include "pfenergy/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "barrier.hpp"
#include "energy_model.hpp"
#include "pfenergy/error.hpp"

namespace pfenergy {

using linalg::SymMatrix;
using linalg::Vector;

std::string_view to_string(SolveStatus status) noexcept {
  switch (status) {
    case SolveStatus::SolutionFound: return "SolutionFound";
    case SolveStatus::NoSolutionInC: return "NoSolutionInC";
    case SolveStatus::MaxIterations: return "MaxIterations";
  }
  return "MaxIterations";
}

namespace {

constexpr double kMaxImpliedSlack = 1e-3;

// Newton direction for a (possibly only semidefinite) Hessian: Cholesky with
// an increasing diagonal shift on failure.
Vector newton_direction(SymMatrix h, const Vector& g) {
  Vector rhs(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) rhs[i] = -g[i];
  if (auto c = linalg::Cholesky::factor(h)) return c->solve(rhs);
  double tau = 1e-10 * (1.0 + h.max_abs_diagonal());
  for (int k = 0; k < 30; ++k, tau *= 10.0) {
    SymMatrix shifted = h;
    for (std::size_t i = 0; i < h.order(); ++i) shifted.add(i, i, tau);
    if (auto c = linalg::Cholesky::factor(shifted)) return c->solve(rhs);
  }
  throw Error(ErrorCode::NumericalFailure, "Newton system could not be regularized");
}

Vector axpy(const Vector& x, double t, const Vector& d) {
  Vector y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += t * d[i];
  return y;
}

struct Objective {
  const Network& net;
  const detail::EnergyModel& model;
  const detail::DomainBarrier& barrier;
  double mu;  // 0: energy only (still restricted to the feasible set)

  std::optional<double> value(const Vector& x) const {
    const PFState s = PFState::unpack(net, x);
    const auto phi = barrier.value(s);
    if (!phi) return std::nullopt;
    const double f = detail::model_value(net, model, s) + mu * *phi;
    if (!std::isfinite(f)) return std::nullopt;
    return f;
  }
};

enum class StepResult { Accepted, Converged, Stalled };

double gradient_norm(const Objective& obj, const Vector& x) {
  return linalg::norm_inf(detail::model_gradient(obj.net, obj.model, PFState::unpack(obj.net, x)).packed());
}

struct Newton {
  const Objective& obj;
  double armijo;

  // One damped Newton step from x. `decrement_tol` decides convergence.
  StepResult step(Vector& x, double& fx, double decrement_tol, BarrierStep& rec) const {
    const PFState s = PFState::unpack(obj.net, x);
    const EnergyEval ge = detail::model_gradient(obj.net, obj.model, s);
    Vector g = ge.packed();
    SymMatrix h = detail::model_hessian(obj.net, obj.model, s);
    if (obj.mu > 0.0) {
      const auto be = obj.barrier.evaluate(s);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += obj.mu * be.grad[i];
      h += obj.mu * be.hess;
    }
    const Vector d = newton_direction(h, g);
    const double slope = linalg::dot(g, d);
    if (-slope <= decrement_tol) return StepResult::Converged;

    double t = 1.0;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      const Vector xt = axpy(x, t, d);
      const auto ft = obj.value(xt);
      if (ft && *ft <= fx + armijo * t * slope) {
        rec.objective_before = fx;
        rec.objective_after = *ft;
        rec.step = t;
        x = xt;
        fx = *ft;
        return StepResult::Accepted;
      }
    }
    return -slope <= 1e3 * decrement_tol ? StepResult::Converged : StepResult::Stalled;
  }

  // Newton step on the energy alone, damped on the gradient norm: close to
  // the minimizer the decrease in E drops below its rounding error while the
  // gradient is still well resolved.
  StepResult polish(Vector& x, double& fx, double& gnorm, BarrierStep& rec) const {
    const PFState s = PFState::unpack(obj.net, x);
    const Vector g = detail::model_gradient(obj.net, obj.model, s).packed();
    const Vector d = newton_direction(detail::model_hessian(obj.net, obj.model, s), g);
    double t = 1.0;
    for (int k = 0; k < 30; ++k, t *= 0.5) {
      const Vector xt = axpy(x, t, d);
      const auto ft = obj.value(xt);
      if (!ft) continue;
      const double gt = gradient_norm(obj, xt);
      if (gt < (1.0 - armijo * t) * gnorm) {
        rec.objective_before = fx;
        rec.objective_after = *ft;
        rec.step = t;
        x = xt;
        fx = *ft;
        gnorm = gt;
        return StepResult::Accepted;
      }
    }
    return StepResult::Stalled;
  }
};

SolveOutcome run_barrier(const Network& net, const detail::EnergyModel& model, const PFState& s0,
                         const BarrierOptions& opts) {
  if (!net.has_unit_setpoints())
    throw Error(ErrorCode::InvalidArgument, "voltage set-points must be 1; absorb them into the line susceptances");
  if (!(opts.grad_tol > 0.0) || !(opts.mu_initial > 0.0) || !(opts.mu_factor > 0.0 && opts.mu_factor < 1.0) ||
      !(opts.mu_final > 0.0))
    throw Error(ErrorCode::InvalidArgument, "invalid barrier options");

  const detail::DomainBarrier barrier(net, opts.box);
  Vector x = s0.pack(net);
  if (!barrier.feasible(PFState::unpack(net, x)))
    throw Error(ErrorCode::InfeasibleStart, "start point is not strictly inside the convexity domain");

  SolveOutcome out;
  bool converged_all = true;
  std::size_t stage = 0;
  double mu = opts.mu_initial;
  for (;; ++stage) {
    const Objective obj{net, model, barrier, mu};
    const Newton newton{obj, opts.armijo};
    double fx = *obj.value(x);
    const double dec_tol = 1e-14 * (1.0 + std::abs(fx));
    bool stage_done = false;
    for (std::size_t it = 0; it < opts.max_inner; ++it) {
      BarrierStep rec{stage, mu, 0, 0, 0};
      const StepResult r = newton.step(x, fx, dec_tol, rec);
      if (r == StepResult::Accepted) {
        out.trace.push_back(rec);
        ++out.iterations;
        continue;
      }
      stage_done = r == StepResult::Converged;
      break;
    }
    if (!stage_done) converged_all = false;
    if (mu <= opts.mu_final) break;
    mu *= opts.mu_factor;
  }

  auto classify = [&](const PFState& s, bool after_polish) {
    out.state = s;
    out.grad_norm = linalg::norm_inf(detail::model_gradient(net, model, s).packed());
    out.certificate = in_domain_C(net, s);
    const double lmi_scale = net.pq_buses().empty() ? 1.0 : 1.0 + convexity_matrix(net, s).max_abs_diagonal();
    double phase_margin = std::numeric_limits<double>::infinity();
    for (const auto& e : net.edges())
      phase_margin = std::min(phase_margin, std::numbers::pi / 2 - std::abs(s.theta[e.from] - s.theta[e.to]));
    // At a converged barrier point the slack of an active constraint is about
    // mu / multiplier, and the multiplier is of order |grad E|. Once the
    // polish has failed to reach the tolerance, widen the thresholds to that
    // estimate (capped) so a minimizer pinned against the boundary at the last
    // barrier weight is not mistaken for a stalled run.
    double implied = 0.0;
    if (after_polish && converged_all && out.grad_norm > opts.grad_tol) {
      const double terms = static_cast<double>(net.pq_buses().size() + net.edges().size());
      implied = std::min(kMaxImpliedSlack, 10.0 * terms * opts.mu_final / out.grad_norm);
    }
    out.boundary_active = out.certificate.lmi_min_eig < std::max(opts.boundary_lmi, implied) * lmi_scale ||
                          phase_margin < std::max(opts.boundary_phase, implied) ||
                          barrier.box_margin(s) < std::max(opts.boundary_phase, implied);
  };

  classify(PFState::unpack(net, x), false);
  if (!out.boundary_active && out.grad_norm > opts.grad_tol) {
    const Objective obj{net, model, barrier, 0.0};
    const Newton newton{obj, opts.armijo};
    double fx = *obj.value(x);
    double gnorm = gradient_norm(obj, x);
    for (std::size_t it = 0; it < opts.max_polish && gnorm > 0.01 * opts.grad_tol; ++it) {
      BarrierStep rec{stage + 1, 0.0, 0, 0, 0};
      if (newton.polish(x, fx, gnorm, rec) != StepResult::Accepted) break;
      out.trace.push_back(rec);
      ++out.iterations;
    }
    classify(PFState::unpack(net, x), true);
  }

  out.energy = detail::model_value(net, model, out.state);
  if (!out.boundary_active && out.grad_norm <= opts.grad_tol) {
    out.status = SolveStatus::SolutionFound;
  } else if (out.boundary_active) {
    out.status = SolveStatus::NoSolutionInC;
    out.message = "minimizer lies on the boundary of the convexity domain";
  } else {
    // A large gradient away from the boundary means the iterations fell short.
    out.status = SolveStatus::MaxIterations;
    out.message = converged_all ? "energy polish stalled before reaching the gradient tolerance"
                                : "barrier iterations did not converge";
  }
  return out;
}

}  // namespace

SolveOutcome solve_convex(const Network& net, const PFState& s0, const BarrierOptions& opts) {
  if (!net.is_lossless())
    throw Error(ErrorCode::InvalidArgument, "network has conductances; use the lossy solver or losslessify");
  return run_barrier(net, detail::lossless_model(net), s0, opts);
}

SolveOutcome solve_convex(const Network& net, const BarrierOptions& opts) {
  return solve_convex(net, PFState::flat(net), opts);
}

SolveOutcome solve_convex_lossy(const Network& net, const PFState& s0, const BarrierOptions& opts) {
  const double kappa = require_lossy_ratio(net);
  return run_barrier(net, detail::lossy_model(net, kappa), s0, opts);
}

SolveOutcome solve_convex_lossy(const Network& net, const BarrierOptions& opts) {
  return solve_convex_lossy(net, PFState::flat(net), opts);
}

}  // namespace pfenergy
