#include <doctest.h>

#include <chrono>
#include <cmath>

#include "entroplan/planner.hpp"

using namespace entroplan;

namespace {

RssmConfig small_rssm() {
  RssmConfig cfg;
  cfg.obs_dim = 6;
  cfg.action_dim = 4;
  cfg.deter = 24;
  cfg.hidden = 24;
  cfg.units = 24;
  cfg.groups = 2;
  cfg.classes = 4;
  return cfg;
}

ScoredTrajectory cand(double score) {
  ScoredTrajectory c;
  c.score = score;
  c.final_feature = Eigen::VectorXd::Zero(1);
  c.actions = {0, 1};
  return c;
}

}  // namespace

TEST_CASE("trajectory scores weight reward and entropy") {
  CHECK(score_trajectory(2.0, 3.0, 1.0, 1.0) == doctest::Approx(5.0));
  CHECK(score_trajectory(2.0, 3.0, 1.0, 0.0) == doctest::Approx(2.0));
  CHECK(score_trajectory(2.0, 3.0, 0.0, 1.0) == doctest::Approx(3.0));
}

TEST_CASE("plan selection takes the argmax with lowest-index ties") {
  std::vector<ScoredTrajectory> cs = {cand(1.0), cand(3.0), cand(2.0)};
  cs[1].actions = {7};
  CHECK(select_plan(cs).actions[0] == 7);

  std::vector<ScoredTrajectory> tied = {cand(2.0), cand(2.0), cand(2.0)};
  tied[0].actions = {9};
  CHECK(select_plan(tied).actions[0] == 9);

  CHECK_THROWS_AS(select_plan({}), EmptyCandidates);
}

TEST_CASE("selection is invariant under positive rescaling of scores") {
  Rng rng(3);
  for (int rep = 0; rep < 300; ++rep) {
    const int n = 2 + rng.uniform_int(20);
    std::vector<ScoredTrajectory> cs;
    for (int i = 0; i < n; ++i) {
      ScoredTrajectory c = cand(rng.normal());
      c.actions = {i};
      cs.push_back(c);
    }
    const int base = select_plan(cs).actions[0];
    const double scale = 0.1 + 10.0 * rng.uniform01();
    for (auto& c : cs) c.score *= scale;
    CHECK(select_plan(cs).actions[0] == base);
  }
}

TEST_CASE("maximal-entropy candidate wins at equal rewards") {
  Rng rng(5);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 3 + rng.uniform_int(8);
    std::vector<ScoredTrajectory> cs;
    const int star = rng.uniform_int(n);
    for (int i = 0; i < n; ++i) {
      ScoredTrajectory c;
      c.cum_reward = 1.5;
      c.cum_entropy = i == star ? 4.0 : 1.0 + rng.uniform01();
      c.score = score_trajectory(c.cum_reward, c.cum_entropy, 1.0, 1.0);
      c.actions = {i};
      c.final_feature = Eigen::VectorXd::Zero(1);
      cs.push_back(c);
    }
    CHECK(select_plan(cs).actions[0] == star);
  }
}

TEST_CASE("advance_plan walks the actions once and then stays exhausted") {
  Plan plan;
  plan.actions = {4, 2, 5};
  plan.active = true;
  CHECK(plan.position() == doctest::Approx(0.0));
  CHECK(advance_plan(plan).value() == 4);
  CHECK(plan.position() == doctest::Approx(1.0 / 3.0));
  CHECK(advance_plan(plan).value() == 2);
  CHECK(advance_plan(plan).value() == 5);
  CHECK(!plan.active);
  CHECK(plan.position() == doctest::Approx(1.0));
  CHECK(!advance_plan(plan).has_value());
  CHECK(!advance_plan(plan).has_value());
}

TEST_CASE("generate_candidates produces scored rollouts from one root") {
  RssmConfig rssm = small_rssm();
  Rng init(7);
  WorldModel wm(rssm, init);
  AgentConfig acfg;
  acfg.action_dim = rssm.action_dim;
  acfg.feature_dim = rssm.feature_dim();
  acfg.units = 16;
  ActorCritic ac(acfg, init);
  Rng latent(8);
  ModelState start = wm.init_state(1, latent);

  PlannerConfig pcfg;
  pcfg.choices = 8;
  pcfg.horizon = 5;
  Planner planner(pcfg);
  Rng imag(9);

  // parameters must be untouched by planning (read-only contract)
  double before = 0.0;
  for (Param* p : wm.params()) before += p->value.sum();
  for (Param* p : ac.params()) before += p->value.sum();

  auto cands = planner.generate_candidates(wm, ac, start, 8, 5, imag);
  CHECK(cands.size() == 8);
  for (const auto& c : cands) {
    CHECK(c.actions.size() == 5);
    for (int a : c.actions) {
      CHECK(a >= 0);
      CHECK(a < rssm.action_dim);
    }
    CHECK(c.cum_entropy >= 0.0);
    CHECK(c.score ==
          doctest::Approx(score_trajectory(c.cum_reward, c.cum_entropy, 1.0,
                                           1.0)));
    CHECK(c.final_feature.size() == rssm.feature_dim());
  }

  double after = 0.0;
  for (Param* p : wm.params()) after += p->value.sum();
  for (Param* p : ac.params()) after += p->value.sum();
  CHECK(before == after);

  auto single = planner.generate_candidates(wm, ac, start, 1, 5, imag);
  CHECK(single.size() == 1);
}

TEST_CASE("mean aggregation divides both cumulative terms by the horizon") {
  RssmConfig rssm = small_rssm();
  Rng init(17);
  WorldModel wm(rssm, init);
  AgentConfig acfg;
  acfg.action_dim = rssm.action_dim;
  acfg.feature_dim = rssm.feature_dim();
  acfg.units = 16;
  ActorCritic ac(acfg, init);
  Rng latent(18);
  ModelState start = wm.init_state(1, latent);

  PlannerConfig sum_cfg;
  sum_cfg.choices = 4;
  sum_cfg.horizon = 6;
  PlannerConfig mean_cfg = sum_cfg;
  mean_cfg.mean_aggregate = true;

  Rng ia(19), ib(19);
  auto sums = Planner(sum_cfg).generate_candidates(wm, ac, start, 4, 6, ia);
  auto means = Planner(mean_cfg).generate_candidates(wm, ac, start, 4, 6, ib);
  for (int i = 0; i < 4; ++i) {
    CHECK(means[i].cum_entropy ==
          doctest::Approx(sums[i].cum_entropy / 6.0).epsilon(1e-12));
    CHECK(means[i].cum_reward ==
          doctest::Approx(sums[i].cum_reward / 6.0).epsilon(1e-12));
  }
}

TEST_CASE("planning-call time grows about linearly with the horizon") {
  RssmConfig rssm = small_rssm();
  rssm.deter = 64;
  rssm.hidden = 64;
  rssm.units = 64;
  Rng init(21);
  WorldModel wm(rssm, init);
  AgentConfig acfg;
  acfg.action_dim = rssm.action_dim;
  acfg.feature_dim = rssm.feature_dim();
  acfg.units = 64;
  ActorCritic ac(acfg, init);
  Rng latent(22);
  ModelState start = wm.init_state(1, latent);

  PlannerConfig pcfg;
  pcfg.choices = 64;
  pcfg.horizon = 16;
  Planner planner(pcfg);
  Rng imag(23);

  auto median_time = [&](int horizon) {
    std::vector<double> times;
    for (int rep = 0; rep < 15; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      planner.generate_candidates(wm, ac, start, 64, horizon, imag);
      times.push_back(std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count());
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
  };
  median_time(8);  // warmup
  const double ratio = median_time(16) / median_time(8);
  CHECK(ratio > 1.4);
  CHECK(ratio < 2.6);
}
