#include <benchmark/benchmark.h>

#include <random>

#include "jointplan/io.hpp"
#include "jointplan/planner.hpp"
#include "jointplan/sampler.hpp"
#include "jointplan/simulator.hpp"

using namespace jointplan;

namespace {

const Scenario& merge() {
  static const Scenario s = io::load_scenario(JOINTPLAN_DATA_DIR "/scenarios/merge.json");
  return s;
}

// Dense random tables; N+1 vehicles with K candidates each.
EnergyTables random_tables(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::bernoulli_distribution hit(0.1);
  EnergyTables t(n, k);
  for (double& u : t.unary) u = g(rng);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) t.p(i, j, a, b) = g(rng) + (hit(rng) ? 100.0 : 0.0);
      }
    }
  }
  return t;
}

void BM_SampleCandidates(benchmark::State& state) {
  SamplerConfig cfg;
  cfg.num_candidates = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    ++cfg.seed;
    benchmark::DoNotOptimize(sample_candidates({Pose2(), 8.0}, cfg));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleCandidates)->Arg(12)->Arg(50);

void BM_BuildTables(benchmark::State& state) {
  const auto scene = initial_scene(merge(), 1);
  const auto goal = scenario_goal(merge());
  for (auto _ : state) benchmark::DoNotOptimize(build_tables(scene, goal, EnergyParams{}));
}
BENCHMARK(BM_BuildTables);

void BM_Lbp(benchmark::State& state) {
  const auto t = random_tables(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)), 3);
  LbpConfig cfg;
  cfg.fixed_iterations = true;
  for (auto _ : state) benchmark::DoNotOptimize(lbp(t, cfg));
}
BENCHMARK(BM_Lbp)->Args({3, 12})->Args({5, 12})->Args({7, 12})->Args({5, 50});

void BM_Plan(benchmark::State& state) {
  const auto scene = initial_scene(merge(), 1);
  const auto tables = build_tables(scene, scenario_goal(merge()), EnergyParams{});
  PlannerConfig p;
  p.variant = static_cast<PlannerVariant>(state.range(0));
  p.set_size = 3;
  state.SetLabel(to_string(p.variant));
  for (auto _ : state) benchmark::DoNotOptimize(plan(scene[0].candidates, tables, p));
}
BENCHMARK(BM_Plan)->DenseRange(0, 2);

void BM_Episode(benchmark::State& state) {
  PlannerConfig p;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(step_episode(merge(), p, EnergyParams{}, ++seed));
}
BENCHMARK(BM_Episode)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
