#include <filesystem>

#include <benchmark/benchmark.h>

#include "pfenergy/convexity.hpp"
#include "pfenergy/reduced.hpp"
#include "pfenergy/solver.hpp"

using namespace pfenergy;

namespace {

const std::filesystem::path kData = PFENERGY_DATA_DIR;

const Network& ieee(int which) {
  static const Network n14 = absorb_setpoints(losslessify(load_case(kData / "case14.m")));
  static const Network n118 = absorb_setpoints(losslessify(load_case(kData / "case118.m")));
  return which == 14 ? n14 : n118;
}

// A state away from the origin so every trig term is exercised.
PFState spread(const Network& net) {
  PFState s = PFState::flat(net);
  for (std::size_t i : net.angle_buses()) s.theta[i] = 0.01 * static_cast<double>(i % 7);
  for (std::size_t i : net.pq_buses()) s.rho[i] = -0.005 * static_cast<double>(i % 5);
  return s;
}

void BM_EnergyGradient(benchmark::State& st) {
  const Network& net = ieee(static_cast<int>(st.range(0)));
  const PFState s = spread(net);
  for (auto _ : st) benchmark::DoNotOptimize(energy_gradient(net, s));
}
BENCHMARK(BM_EnergyGradient)->Arg(14)->Arg(118);

void BM_Hessian(benchmark::State& st) {
  const Network& net = ieee(static_cast<int>(st.range(0)));
  const PFState s = spread(net);
  for (auto _ : st) benchmark::DoNotOptimize(hessian(net, s));
}
BENCHMARK(BM_Hessian)->Arg(14)->Arg(118);

void BM_InDomainC(benchmark::State& st) {
  const Network& net = ieee(static_cast<int>(st.range(0)));
  const PFState s = spread(net);
  for (auto _ : st) benchmark::DoNotOptimize(in_domain_C(net, s));
}
BENCHMARK(BM_InDomainC)->Arg(14)->Arg(118);

void BM_SolveConvex(benchmark::State& st) {
  const Network& net = ieee(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(solve_convex(net));
}
BENCHMARK(BM_SolveConvex)->Arg(14)->Arg(118)->Unit(benchmark::kMillisecond);

void BM_SolveNewton(benchmark::State& st) {
  const Network& net = ieee(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(solve_newton(net, PFState::flat(net)));
}
BENCHMARK(BM_SolveNewton)->Arg(14)->Arg(118)->Unit(benchmark::kMillisecond);

void BM_PhaseBoundThreeBusExact(benchmark::State& st) {
  const Network net = load_case(kData / "three_bus.json");
  for (auto _ : st) benchmark::DoNotOptimize(max_phase_bound(net, 1.1, BoundMode::ExactVertices));
}
BENCHMARK(BM_PhaseBoundThreeBusExact)->Unit(benchmark::kMillisecond);

void BM_PhaseBoundIeee14(benchmark::State& st) {
  const Network& net = ieee(14);
  for (auto _ : st) benchmark::DoNotOptimize(max_phase_bound(net, 1.1));
}
BENCHMARK(BM_PhaseBoundIeee14)->Unit(benchmark::kMillisecond);

void BM_ReactiveProgram(benchmark::State& st) {
  const Network net = load_case(kData / "three_bus.json");
  const linalg::Vector theta{0.0, -0.05, -0.08}, c{1.0, 1.0};
  for (auto _ : st) benchmark::DoNotOptimize(convex_reactive_solve(net, theta, c));
}
BENCHMARK(BM_ReactiveProgram);

}  // namespace

BENCHMARK_MAIN();
