#include <benchmark/benchmark.h>

#include "entroplan/maze.hpp"

using namespace entroplan;

static void BM_GenerateMaze(benchmark::State& state) {
  MazeSpec spec;
  spec.width = static_cast<int>(state.range(0));
  spec.height = static_cast<int>(state.range(0));
  uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_maze(spec, seed++));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GenerateMaze)->Arg(8)->Arg(16)->Arg(32)->Complexity();

static void BM_ConnectivityCheck(benchmark::State& state) {
  MazeSpec spec;
  MazeState maze = generate_maze(spec, 42);
  for (auto _ : state) {
    benchmark::DoNotOptimize(connectivity_check(maze));
  }
}
BENCHMARK(BM_ConnectivityCheck);

static void BM_MazeStepAndObserve(benchmark::State& state) {
  MazeSpec spec;
  MazeEnv env(spec);
  Rng rng(3);
  env.reset(rng);
  int action = 0;
  for (auto _ : state) {
    auto out = env.step(action, rng);
    benchmark::DoNotOptimize(out);
    action = (action + 1) % env.action_count();
    if (out.done) env.reset(rng);
  }
}
BENCHMARK(BM_MazeStepAndObserve);

static void BM_RenderTopdown(benchmark::State& state) {
  MazeSpec spec;
  MazeState maze = generate_maze(spec, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_topdown(maze));
  }
}
BENCHMARK(BM_RenderTopdown);
