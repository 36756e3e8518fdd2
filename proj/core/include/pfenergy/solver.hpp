#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pfenergy/convexity.hpp"
#include "pfenergy/energy.hpp"
#include "pfenergy/network.hpp"

namespace pfenergy {

enum class SolveStatus { SolutionFound, NoSolutionInC, MaxIterations };
std::string_view to_string(SolveStatus status) noexcept;

struct BarrierOptions {
  double grad_tol = 1e-8;
  double mu_initial = 1.0;
  double mu_factor = 0.2;
  double mu_final = 1e-9;
  std::size_t max_inner = 100;   // Newton steps per barrier weight
  std::size_t max_polish = 50;   // Newton steps on E after the schedule
  double armijo = 1e-4;
  /// Relative threshold on the convexity matrix eigenvalue for boundary_active.
  double boundary_lmi = 1e-6;
  /// Absolute margin below pi/2 (and to the box faces) for boundary_active.
  double boundary_phase = 1e-5;
  /// Optional operational box intersected into the barrier.
  std::optional<PhaseVoltageBox> box;
};

/// One accepted inner Newton step of the barrier method.
struct BarrierStep {
  std::size_t stage = 0;  // index of the barrier weight; polish steps use the stage after the last weight
  double mu = 0.0;        // 0 for polish steps, which minimize E itself
  double objective_before = 0.0;
  double objective_after = 0.0;
  double step = 0.0;
};

struct SolveOutcome {
  SolveStatus status = SolveStatus::MaxIterations;
  PFState state;
  double grad_norm = 0.0;  // inf-norm of the energy gradient (residual inf-norm for Newton)
  bool boundary_active = false;
  std::size_t iterations = 0;
  ConvexityCertificate certificate;
  double energy = 0.0;
  std::vector<BarrierStep> trace;
  std::string message;
};

/// Damped Newton-Raphson on the injection mismatches with the full (g, b)
/// line model; honors voltage set-points. SolutionFound iff the mismatch
/// inf-norm reaches `tol`.
SolveOutcome solve_newton(const Network& net, const PFState& s0, double tol = 1e-10, std::size_t max_iter = 50);

/// Minimizes the energy over the convexity domain with a log-barrier interior
/// method. Requires a lossless network with unit set-points (InvalidArgument
/// otherwise) and a start strictly inside the domain (InfeasibleStart).
SolveOutcome solve_convex(const Network& net, const PFState& s0, const BarrierOptions& opts = {});
SolveOutcome solve_convex(const Network& net, const BarrierOptions& opts = {});

/// Same method on the constant-ratio lossy energy.
SolveOutcome solve_convex_lossy(const Network& net, const PFState& s0, const BarrierOptions& opts = {});
SolveOutcome solve_convex_lossy(const Network& net, const BarrierOptions& opts = {});

struct SweepRecord {
  double kappa = 1.0;
  double delta = 1.0;
  SolveStatus status = SolveStatus::MaxIterations;
  double grad_norm = 0.0;
  double lmi_min_eig = 0.0;
  bool boundary_active = false;
  std::size_t iterations = 0;
  bool warm_started = false;
  PFState state;
};

/// For each kappa: P scaled by kappa at non-slack buses, Q by delta * kappa at
/// PQ buses, then solve_convex starting from the previous row's solution when
/// it was found, else from the flat start.
std::vector<SweepRecord> sweep_load(const Network& net, double delta, const std::vector<double>& kappa_grid,
                                    const BarrierOptions& opts = {});

/// kappa_min, kappa_min + step, ... up to kappa_max (inclusive within step/1e6).
std::vector<double> kappa_range(double kappa_min, double kappa_max, double step);

}  // namespace pfenergy
