#include <benchmark/benchmark.h>

#include "entroplan/planner.hpp"

using namespace entroplan;

namespace {

struct Fixture {
  RssmConfig rssm;
  WorldModel wm;
  ActorCritic ac;
  Rng latent{7};

  static RssmConfig make_rssm() {
    RssmConfig cfg;
    cfg.obs_dim = 359;
    cfg.action_dim = 6;
    cfg.deter = 128;
    cfg.hidden = 128;
    cfg.units = 128;
    cfg.groups = 8;
    cfg.classes = 8;
    return cfg;
  }
  static AgentConfig make_agent(const RssmConfig& rssm) {
    AgentConfig cfg;
    cfg.action_dim = rssm.action_dim;
    cfg.feature_dim = rssm.feature_dim();
    cfg.units = rssm.units;
    return cfg;
  }

  Fixture() : rssm(make_rssm()), wm([&] {
        Rng init(3);
        return WorldModel(make_rssm(), init);
      }()), ac([&] {
        Rng init(4);
        return ActorCritic(make_agent(make_rssm()), init);
      }()) {}
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

}  // namespace

static void BM_ImagineStep(benchmark::State& state) {
  auto& f = fixture();
  ModelState s = f.wm.init_state(static_cast<int>(state.range(0)), f.latent);
  Mat action = Mat::Zero(6, state.range(0));
  action.row(0).setOnes();
  for (auto _ : state) {
    benchmark::DoNotOptimize(f.wm.imagine_step(s, action, f.latent));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ImagineStep)->RangeMultiplier(4)->Range(1, 256)->Complexity();

static void BM_ObserveStep(benchmark::State& state) {
  auto& f = fixture();
  const int lanes = static_cast<int>(state.range(0));
  ModelState s = f.wm.init_state(lanes, f.latent);
  Mat action = Mat::Zero(6, lanes);
  action.row(0).setOnes();
  Rng orng(9);
  Mat obs(359, lanes);
  for (int j = 0; j < lanes; ++j)
    for (int i = 0; i < 359; ++i) obs(i, j) = orng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(f.wm.observe_step(s, action, obs, f.latent));
  }
}
BENCHMARK(BM_ObserveStep)->Arg(1)->Arg(16);

static void BM_PlanningCall(benchmark::State& state) {
  auto& f = fixture();
  ModelState start = f.wm.init_state(1, f.latent);
  PlannerConfig pcfg;
  pcfg.choices = 256;
  pcfg.horizon = static_cast<int>(state.range(0));
  Planner planner(pcfg);
  Rng imag(11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        planner.plan(f.wm, f.ac, start, imag));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_PlanningCall)->Arg(2)->Arg(4)->Arg(8)->Arg(16)->Complexity();
