#include <benchmark/benchmark.h>

#include <cmath>

#include "entroplan/distmath.hpp"
#include "entroplan/rng.hpp"

using namespace entroplan;

namespace {

Eigen::MatrixXd random_probs(int rows, int cols, uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j) {
    double total = 0.0;
    for (int i = 0; i < rows; ++i) {
      m(i, j) = -std::log(1.0 - rng.uniform01());
      total += m(i, j);
    }
    m.col(j) /= total;
  }
  return m;
}

}  // namespace

static void BM_EntropyCols(benchmark::State& state) {
  const Eigen::MatrixXd probs = random_probs(64, state.range(0), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(entropy_cols(probs));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_EntropyCols)->RangeMultiplier(4)->Range(4, 256)->Complexity();

static void BM_KlCols(benchmark::State& state) {
  const Eigen::MatrixXd q = random_probs(64, state.range(0), 2);
  Eigen::MatrixXd p = random_probs(64, state.range(0), 3);
  p = 0.99 * p.array() + 0.01 / 64;
  for (auto _ : state) {
    benchmark::DoNotOptimize(kl_cols(q, p));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KlCols)->RangeMultiplier(4)->Range(4, 256)->Complexity();

static void BM_InformationGain(benchmark::State& state) {
  Eigen::MatrixXd joint = random_probs(8, 8, 4);
  joint /= joint.sum();
  for (auto _ : state) {
    benchmark::DoNotOptimize(information_gain(joint));
  }
}
BENCHMARK(BM_InformationGain);

BENCHMARK_MAIN();
