#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pfenergy/error.hpp"
#include "pfenergy/solver.hpp"

using namespace pfenergy;

namespace {

const std::filesystem::path kData = PFENERGY_DATA_DIR;

Network unit_case(const char* name) { return absorb_setpoints(losslessify(load_case(kData / name))); }

Network two_bus(double s) {
  return Network({{1, BusKind::Slack, 0, 0, 1}, {2, BusKind::PQ, -s, -s, 1}}, {{1, 2, 1, 0}});
}

double max_diff(const PFState& a, const PFState& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.rho.size(); ++i)
    d = std::max({d, std::abs(a.rho[i] - b.rho[i]), std::abs(a.theta[i] - b.theta[i])});
  return d;
}

}  // namespace

TEST(Convex, TwoBusMatchesClosedForm) {
  for (double s : {0.01, 0.1, 0.2}) {
    const auto out = solve_convex(two_bus(s));
    ASSERT_EQ(out.status, SolveStatus::SolutionFound) << s << " " << out.message;
    const auto root = oracle::two_bus_high_root(s);
    EXPECT_NEAR(std::exp(out.state.rho[1]), root.v, 1e-6);
    EXPECT_NEAR(out.state.theta[1], root.theta, 1e-6);
    EXPECT_TRUE(out.certificate.in_C);
    EXPECT_LE(out.grad_norm, 1e-8);
  }
}

TEST(Convex, TwoBusBeyondCollapse) {
  const auto out = solve_convex(two_bus(0.25));
  EXPECT_EQ(out.status, SolveStatus::NoSolutionInC);
  EXPECT_TRUE(out.boundary_active);
}

TEST(Convex, JustPastCollapseIsOnTheBoundary) {
  // The barrier minimizer sits within ~1e-6 of the boundary here; it must not
  // be reported as a stalled run.
  for (double s : {0.2075, 0.208}) {
    const auto out = solve_convex(two_bus(s));
    EXPECT_EQ(out.status, SolveStatus::NoSolutionInC) << s;
    EXPECT_TRUE(out.boundary_active) << s;
  }
}

TEST(Convex, AgreesWithNewton) {
  for (const char* name : {"three_bus.json", "three_bus_tree.json", "case14.m"}) {
    const Network net = unit_case(name);
    const auto c = solve_convex(net);
    ASSERT_EQ(c.status, SolveStatus::SolutionFound) << name;
    const auto n = solve_newton(net, PFState::flat(net));
    ASSERT_EQ(n.status, SolveStatus::SolutionFound) << name;
    EXPECT_LT(max_diff(c.state, n.state), 1e-6) << name;
    EXPECT_LE(linalg::norm_inf(pf_residuals(net, c.state)), 1e-8) << name;
  }
}

TEST(Convex, ThreeBusVoltage) {
  const auto out = solve_convex(unit_case("three_bus.json"));
  ASSERT_EQ(out.status, SolveStatus::SolutionFound);
  EXPECT_NEAR(std::exp(out.state.rho[1]), 0.95443492, 1e-7);
}

TEST(Convex, TraceIsMonotone) {
  const auto out = solve_convex(unit_case("three_bus.json"));
  ASSERT_FALSE(out.trace.empty());
  for (const auto& step : out.trace) {
    if (step.mu > 0.0) EXPECT_LE(step.objective_after, step.objective_before);
    EXPECT_GT(step.step, 0.0);
  }
}

TEST(Convex, RequiresLosslessUnitCase) {
  const Network raw = load_case(kData / "case14.m");
  try {
    solve_convex(raw);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(Convex, InfeasibleStart) {
  const Network net = two_bus(0.1);
  PFState s = PFState::flat(net);
  s.theta[1] = 1.5;
  try {
    solve_convex(net, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InfeasibleStart);
  }
}

TEST(Convex, BoxIsRespected) {
  BarrierOptions opts;
  opts.box = PhaseVoltageBox{1.5, 0.05};
  const auto out = solve_convex(two_bus(0.1), opts);
  // The unconstrained solution has theta ~ -0.11, outside the box.
  EXPECT_EQ(out.status, SolveStatus::NoSolutionInC);
  EXPECT_LE(std::abs(out.state.theta[1]), 0.05);
}

TEST(Newton, TwoBus) {
  const auto out = solve_newton(two_bus(0.1), PFState::flat(two_bus(0.1)));
  ASSERT_EQ(out.status, SolveStatus::SolutionFound);
  const auto root = oracle::two_bus_high_root(0.1);
  EXPECT_NEAR(std::exp(out.state.rho[1]), root.v, 1e-10);
  EXPECT_NEAR(out.state.theta[1], root.theta, 1e-10);
}

TEST(Newton, HonorsSetpointsAndLosses) {
  const Network net = load_case(kData / "case14.m");
  const auto out = solve_newton(net, PFState::flat(net));
  ASSERT_EQ(out.status, SolveStatus::SolutionFound);
  const auto ref = oracle::complex_mismatch(net, out.state);
  for (double r : ref) EXPECT_LE(std::abs(r), 1e-9);
}

TEST(Newton, FailsBeyondCollapse) {
  const Network net = two_bus(0.3);
  EXPECT_NE(solve_newton(net, PFState::flat(net)).status, SolveStatus::SolutionFound);
  EXPECT_THROW(solve_newton(net, PFState::flat(net), 0.0), Error);
}

TEST(LossyConvex, ZeroRatioReproducesLossless) {
  const Network net = unit_case("three_bus.json");
  const auto a = solve_convex(net), b = solve_convex_lossy(net);
  ASSERT_EQ(a.status, SolveStatus::SolutionFound);
  ASSERT_EQ(b.status, SolveStatus::SolutionFound);
  EXPECT_LT(max_diff(a.state, b.state), 1e-10);
}

TEST(LossyConvex, TwoBusSolvesPhysicalEquations) {
  const Network net = with_uniform_ratio(two_bus(0.1), 0.2);
  const auto out = solve_convex_lossy(net);
  ASSERT_EQ(out.status, SolveStatus::SolutionFound);
  EXPECT_LE(linalg::norm_inf(lossy_residuals(net, out.state)), 1e-8);
  EXPECT_LE(linalg::norm_inf(physical_mismatch(net, out.state)), 1e-8);
  const auto n = solve_newton(net, PFState::flat(net));
  ASSERT_EQ(n.status, SolveStatus::SolutionFound);
  EXPECT_LT(max_diff(out.state, n.state), 1e-6);
}

TEST(Sweep, KappaRange) {
  const auto g = kappa_range(1.0, 2.0, 0.25);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_DOUBLE_EQ(g.back(), 2.0);
  EXPECT_EQ(kappa_range(1.0, 1.0, 0.1).size(), 1u);
  EXPECT_THROW(kappa_range(1.0, 2.0, 0.0), Error);
}

TEST(Sweep, TwoBusTransition) {
  const Network net = two_bus(0.1);
  const auto rows = sweep_load(net, 1.0, kappa_range(1.0, 3.0, 0.1));
  std::size_t transitions = 0;
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (rows[k - 1].status == SolveStatus::SolutionFound && rows[k].status != SolveStatus::SolutionFound)
      ++transitions;
  EXPECT_EQ(transitions, 1u);
  double last_ok = 0.0;
  for (const auto& r : rows)
    if (r.status == SolveStatus::SolutionFound) last_ok = r.kappa;
  EXPECT_NEAR(last_ok, 2.0, 1e-9);  // critical load 0.2071 lies between 0.20 and 0.21
  EXPECT_TRUE(rows[1].warm_started);
}
