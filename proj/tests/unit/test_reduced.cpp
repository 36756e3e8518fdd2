#include <cmath>
#include <filesystem>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pfenergy/error.hpp"
#include "pfenergy/reduced.hpp"
#include "pfenergy/solver.hpp"

using namespace pfenergy;
using linalg::Vector;

namespace {

const std::filesystem::path kData = PFENERGY_DATA_DIR;
constexpr double kDeg = std::numbers::pi / 180.0;

Network three_bus() { return load_case(kData / "three_bus.json"); }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(ReactiveNewton, RecoversFullSolutionVoltages) {
  const Network net = three_bus();
  const auto full = solve_newton(net, PFState::flat(net));
  ASSERT_EQ(full.status, SolveStatus::SolutionFound);
  const Vector rho = solve_reactive_newton(net, full.state.theta);
  for (std::size_t a = 0; a < rho.size(); ++a) EXPECT_NEAR(rho[a], full.state.rho[net.pq_buses()[a]], 1e-9);
}

TEST(ReactiveNewton, Errors) {
  const Network net = three_bus();
  Vector theta(3, 0.0);
  theta[1] = 1.6;
  EXPECT_EQ(code_of([&] { solve_reactive_newton(net, theta); }), ErrorCode::PhaseOutOfRange);
  EXPECT_EQ(code_of([&] { solve_reactive_newton(net, Vector(2, 0.0)); }), ErrorCode::InvalidArgument);
  const Network heavy = scale_injections(net, 1.0, 20.0);
  EXPECT_EQ(code_of([&] { solve_reactive_newton(heavy, Vector(3, 0.0)); }), ErrorCode::NoReactiveSolution);
}

TEST(ReducedEnergy, EnvelopeGradientIsActiveMismatch) {
  const Network net = three_bus();
  Vector theta(3, 0.0);
  theta[1] = -0.05;
  theta[2] = -0.08;
  const Vector rho = solve_reactive_newton(net, theta);
  PFState s = PFState::flat(net);
  s.theta = theta;
  for (std::size_t a = 0; a < rho.size(); ++a) s.rho[net.pq_buses()[a]] = rho[a];
  EXPECT_NEAR(reduced_energy(net, theta), energy_value(net, s), 1e-12);

  const Vector r = pf_residuals(net, s);
  auto f = [&](const oracle::Vec& x) {
    Vector t(3, 0.0);
    t[1] = x[0];
    t[2] = x[1];
    return reduced_energy(net, t);
  };
  const auto g = oracle::fd_gradient(f, {theta[1], theta[2]}, 1e-6);
  EXPECT_NEAR(g[0], -r[0], 1e-6);
  EXPECT_NEAR(g[1], -r[1], 1e-6);
}

TEST(ZetaProgram, MatchesReactiveNewton) {
  const Network net = three_bus();
  for (double t2 : {0.0, -0.05, -0.15}) {
    Vector theta(3, 0.0);
    theta[1] = t2;
    theta[2] = 1.3 * t2;
    const auto st = convex_reactive_solve(net, theta, Vector(2, 1.0));
    const Vector rho = solve_reactive_newton(net, theta);
    for (std::size_t a = 0; a < 2; ++a) {
      EXPECT_NEAR(st.V[a], std::exp(rho[a]), 1e-8);
      EXPECT_NEAR(st.V[a] * st.V[a], st.zeta[a], 1e-12);
      EXPECT_LE(std::abs(st.slack[a]), 1e-8);
      EXPECT_TRUE(st.lower_bound_ok[a]);
    }
  }
}

TEST(ZetaProgram, ThreeBusFlatPhases) {
  const auto st = convex_reactive_solve(three_bus(), Vector(3, 0.0), Vector(2, 1.0));
  EXPECT_NEAR(st.V[0], 0.9570948097, 1e-9);
  EXPECT_NEAR(st.V[1], 0.9537221931, 1e-9);
}

TEST(ZetaProgram, WeightsDoNotChangeTheOptimum) {
  const Network net = three_bus();
  Vector theta(3, 0.0);
  theta[1] = -0.1;
  theta[2] = -0.12;
  const auto a = convex_reactive_solve(net, theta, {1.0, 0.0});
  const auto b = convex_reactive_solve(net, theta, {0.2, 3.0});
  EXPECT_NEAR(a.V[0], b.V[0], 1e-8);
  EXPECT_NEAR(a.V[1], b.V[1], 1e-8);
}

TEST(ZetaProgram, Errors) {
  const Network net = three_bus();
  const Vector zero(3, 0.0);
  EXPECT_EQ(code_of([&] { convex_reactive_solve(net, zero, {1.0}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { convex_reactive_solve(net, zero, {0.0, 0.0}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { convex_reactive_solve(net, zero, {-1.0, 1.0}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { convex_reactive_solve(scale_injections(net, 1.0, -1.0), zero, {1.0, 1.0}); }),
            ErrorCode::UnsupportedSign);
  EXPECT_EQ(code_of([&] { convex_reactive_solve(scale_injections(net, 1.0, 20.0), zero, {1.0, 1.0}); }),
            ErrorCode::NoReactiveSolution);
}

TEST(VoltageBound, DominatesEverySolution) {
  const Network net = three_bus();
  const auto vb = voltage_upper_bound(net);
  EXPECT_NEAR(vb.v_bar[0], 0.957095, 1e-6);
  EXPECT_NEAR(vb.v_bar[1], 0.953722, 1e-6);
  for (double t : {-0.05, -0.2, -0.4}) {
    Vector theta(3, 0.0);
    theta[1] = t;
    theta[2] = 0.7 * t;
    const auto st = convex_reactive_solve(net, theta, Vector(2, 1.0));
    for (std::size_t a = 0; a < 2; ++a) EXPECT_LE(st.V[a], vb.v_bar[a] + 1e-12);
  }
}

TEST(Normalize, RowsSumToOne) {
  const Network net = three_bus();
  const auto nn = normalize(net);
  for (std::size_t a = 0; a < 2; ++a) {
    double sum = 0.0;
    for (std::size_t b = 0; b < nn.m_pq.cols(); ++b) sum += nn.m_pq(a, b);
    for (std::size_t b = 0; b < nn.m_fixed.cols(); ++b) sum += nn.m_fixed(a, b);
    EXPECT_NEAR(sum, 1.0, 1e-14);
  }
  EXPECT_NEAR(nn.q_tilde[0], 1.05 / 43.55, 1e-14);
  EXPECT_NEAR(nn.m_pq(0, 1), 16.67 / 43.55, 1e-14);
}

TEST(Beta, FromRatios) {
  const auto b = beta_from_ratios({3.0, 1.5});
  EXPECT_NEAR(b.beta_min, 0.5, 1e-14);
  EXPECT_NEAR(b.angle_budget_deg, std::acos(std::sqrt(0.5)) / kDeg, 1e-10);
  const auto z = beta_from_ratios({0.5});
  EXPECT_EQ(z.beta_min, 0.0);
  EXPECT_NEAR(z.angle_budget_deg, 90.0, 1e-12);
}

TEST(Beta, ThreeBus) {
  const auto b = beta_condition(three_bus());
  EXPECT_NEAR(b.beta_min, 0.9487, 1e-4);
  EXPECT_NEAR(b.angle_budget_deg, 13.09, 0.01);
  EXPECT_EQ(code_of([&] { beta_condition(scale_injections(three_bus(), 1.0, 0.0)); }), ErrorCode::UnsupportedSign);
}

TEST(Region, FlatCellIsSolvableAndConvex) {
  const auto cell = region_cell(three_bus(), {0.0, 0.0});
  EXPECT_TRUE(cell.solvable);
  EXPECT_TRUE(cell.in_C);
  EXPECT_GT(cell.reduced_min_eig, 0.0);
}

TEST(Region, UnsolvableCell) {
  const auto cell = region_cell(scale_injections(three_bus(), 1.0, 20.0), {0.0, 0.0});
  EXPECT_FALSE(cell.solvable);
  EXPECT_FALSE(cell.in_C);
}

TEST(Region, GridShapeAndSummary) {
  const auto grid = region_grid(three_bus(), 10 * kDeg, -60 * kDeg, 60 * kDeg);
  EXPECT_EQ(grid.axis.size(), 13u);
  EXPECT_EQ(grid.cells.size(), 169u);
  EXPECT_DOUBLE_EQ(grid.cells[1].theta[1] - grid.cells[0].theta[1], 10 * kDeg);
  const auto sum = summarize_region(grid);
  EXPECT_GT(sum.solvable, 0u);
  EXPECT_LE(sum.in_C, sum.solvable);
  EXPECT_LE(sum.agree, sum.compared);
  EXPECT_EQ(code_of([&] { region_grid(load_case(kData / "case14.m"), 0.1, -1, 1); }), ErrorCode::InvalidArgument);
}

TEST(Region, SummaryExcludesBoundaryBand) {
  RegionGrid g;
  g.axis = {0, 1, 2, 3, 4};
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = 0; b < 5; ++b) {
      RegionCell c;
      c.theta = {g.axis[a], g.axis[b]};
      c.solvable = true;
      c.in_C = a < 3;
      c.reduced_min_eig = a < 3 ? 1.0 : -1.0;
      g.cells.push_back(c);
    }
  // An isolated disagreement forms its own band.
  g.cells[0].reduced_min_eig = -1.0;
  const auto s = summarize_region(g);
  EXPECT_EQ(s.solvable, 25u);
  EXPECT_EQ(s.in_C, 15u);
  // Rows 2 and 3 form the band, as do the corner and its three neighbors.
  EXPECT_EQ(s.compared, 25u - 10u - 4u);
  EXPECT_EQ(s.agree, s.compared);
}
