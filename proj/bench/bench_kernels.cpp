// Serial reference against the OpenMP path for each data-parallel kernel.
// The benchmark argument selects the path: 0 serial, 1 parallel.

#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "ngeo/chart_tensor.hpp"
#include "ngeo/line_space.hpp"
#include "ngeo/neutral_flow.hpp"
#include "ngeo/surface_geom.hpp"
#include "ngeo/umbilic_topology.hpp"

using namespace ngeo;

namespace {

Execution exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::Serial : Execution::Parallel;
}

void BM_DiscriminantGrid(benchmark::State& state) {
  const SurfaceImmersion s = ellipsoid(2, 1.5, 1);
  const MetricField g = flat_r3();
  for (auto _ : state) benchmark::DoNotOptimize(discriminant_grid(s, g, 256, 256, {}, exec_of(state)));
}

void BM_DefectGrid(benchmark::State& state) {
  const LineSection sec = normal_congruence(ellipsoid(2, 1.5, 1));
  for (auto _ : state) benchmark::DoNotOptimize(defect_grid(sec, 256, 256, exec_of(state)));
}

void BM_WillmoreQuadrature(benchmark::State& state) {
  const SurfaceImmersion torus = clifford_torus();
  const MetricField g = hopf_eps(0.5);
  SurfaceQuadrature q;
  q.exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(willmore_energy(torus, g, q));
}

void BM_MetricDistance(benchmark::State& state) {
  const MetricField round = round_s3();
  const MetricField bumped = hopf_eps_bumped(0.2);
  L2DistanceOptions o;
  o.resolution = 24;
  o.exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(l2_metric_distance(round, bumped, round, o));
}

void BM_SymplecticArea(benchmark::State& state) {
  const LineSection sec = normal_congruence(ellipsoid(2, 1.5, 1));
  const auto disc = disc_in_section(sec, {1.2, 0.5}, 0.4);
  for (auto _ : state) benchmark::DoNotOptimize(symplectic_area(disc, 96, 192, exec_of(state)));
}

void BM_FlowStep(benchmark::State& state) {
  FlowConfig cfg;
  cfg.grid = 33;
  cfg.steps = 0;
  FlowState s = run_flow(cfg).state;
  s.params.exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(flow_step(s));
}

}  // namespace

BENCHMARK(BM_DiscriminantGrid)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DefectGrid)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WillmoreQuadrature)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MetricDistance)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SymplecticArea)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FlowStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
