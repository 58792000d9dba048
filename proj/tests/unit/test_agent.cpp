#include <doctest.h>

#include <cmath>

#include "entroplan/agent.hpp"

using namespace entroplan;

namespace {

RssmConfig tiny_rssm() {
  RssmConfig cfg;
  cfg.obs_dim = 3;
  cfg.action_dim = 4;
  cfg.deter = 8;
  cfg.hidden = 8;
  cfg.units = 8;
  cfg.groups = 2;
  cfg.classes = 4;
  return cfg;
}

AgentConfig tiny_agent(const RssmConfig& rssm) {
  AgentConfig cfg;
  cfg.action_dim = rssm.action_dim;
  cfg.feature_dim = rssm.feature_dim();
  cfg.units = 16;
  return cfg;
}

}  // namespace

TEST_CASE("greedy action is deterministic and matches the argmax") {
  RssmConfig rssm = tiny_rssm();
  Rng init(3);
  WorldModel wm(rssm, init);
  ActorCritic ac(tiny_agent(rssm), init);
  Rng latent(5);
  for (int rep = 0; rep < 100; ++rep) {
    ModelState state = wm.init_state(1, latent);
    state.h = state.h.array() + 0.1 * rep;
    Rng unused(1);
    const int a1 = ac.act(wm, state, ActMode::kGreedy, unused);
    const int a2 = ac.act(wm, state, ActMode::kGreedy, unused);
    CHECK(a1 == a2);
    Eigen::Index argmax = 0;
    ac.action_probs(wm.feature(state)).col(0).maxCoeff(&argmax);
    CHECK(a1 == static_cast<int>(argmax));
  }
}

TEST_CASE("epsilon one gives uniform action frequencies") {
  RssmConfig rssm = tiny_rssm();
  Rng init(7);
  WorldModel wm(rssm, init);
  ActorCritic ac(tiny_agent(rssm), init);
  Rng latent(8);
  ModelState state = wm.init_state(1, latent);
  Rng draws(9);
  const int n = 100000;
  std::vector<int> counts(rssm.action_dim, 0);
  for (int i = 0; i < n; ++i)
    ++counts[ac.act(wm, state, ActMode::kSample, draws, 1.0)];
  const double expect = 1.0 / rssm.action_dim;
  const double sigma = std::sqrt(expect * (1.0 - expect) / n);
  for (int a = 0; a < rssm.action_dim; ++a) {
    const double freq = static_cast<double>(counts[a]) / n;
    CHECK(std::abs(freq - expect) < 3.0 * sigma);
  }
}

TEST_CASE("imagined rollouts have consistent shapes and bounded entropies") {
  RssmConfig rssm = tiny_rssm();
  Rng init(11);
  WorldModel wm(rssm, init);
  ActorCritic ac(tiny_agent(rssm), init);
  Rng latent(12);

  ModelState start = wm.init_state(2, latent);
  Rng imag(13);
  ImaginedTrajectory traj = ac.imagine_rollout(wm, start, 1, imag);
  CHECK(traj.horizon() == 1);
  CHECK(traj.states.size() == 2);
  CHECK(traj.actions.size() == 1);
  CHECK(traj.rewards.rows() == 1);

  ImaginedTrajectory longer =
      ac.imagine_rollout(wm, wm.init_state(3, latent), 7, imag);
  const double bound = rssm.groups * std::log(rssm.classes) + 1e-9;
  for (int t = 0; t < 7; ++t)
    for (int lane = 0; lane < 3; ++lane) {
      CHECK(longer.prior_entropies(t, lane) >= 0.0);
      CHECK(longer.prior_entropies(t, lane) <= bound);
    }
}

TEST_CASE("stochastic rollouts from one start differ across seeds") {
  RssmConfig rssm = tiny_rssm();
  Rng init(17);
  WorldModel wm(rssm, init);
  ActorCritic ac(tiny_agent(rssm), init);
  Rng latent(18);
  ModelState start = wm.init_state(1, latent);

  int differing = 0;
  for (int pair = 0; pair < 100; ++pair) {
    Rng ia(1000 + pair), ib(5000 + pair);
    ImaginedTrajectory ta = ac.imagine_rollout(wm, start, 6, ia);
    ImaginedTrajectory tb = ac.imagine_rollout(wm, start, 6, ib);
    bool same = true;
    for (int t = 0; t < 6 && same; ++t)
      same = (ta.actions[t] - tb.actions[t]).norm() == 0.0;
    differing += same ? 0 : 1;
  }
  CHECK(differing >= 99);
}

TEST_CASE("lambda returns match the recursion in closed cases") {
  // one step, lambda 0: r + discount * cont * V(s1)
  Mat rewards(1, 1), continues(1, 1), values(2, 1);
  rewards << 0.7;
  continues << 0.9;
  values << 0.3, 1.1;
  Mat r = ActorCritic::lambda_returns(rewards, continues, values, 0.99, 0.0);
  CHECK(r(0, 0) == doctest::Approx(0.7 + 0.99 * 0.9 * 1.1).epsilon(1e-12));

  // discount 0: returns equal immediate rewards
  Mat rewards3(3, 2), continues3(3, 2), values3(4, 2);
  Rng rng(21);
  for (int t = 0; t < 3; ++t)
    for (int lane = 0; lane < 2; ++lane) {
      rewards3(t, lane) = rng.normal();
      continues3(t, lane) = rng.uniform01();
    }
  for (int t = 0; t < 4; ++t)
    for (int lane = 0; lane < 2; ++lane) values3(t, lane) = rng.normal();
  Mat myopic =
      ActorCritic::lambda_returns(rewards3, continues3, values3, 0.0, 0.95);
  CHECK((myopic - rewards3).norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("lambda returns match an independent brute-force recursion") {
  Rng rng(23);
  const double discount = 0.97, lambda = 0.9;
  for (int rep = 0; rep < 200; ++rep) {
    const int horizon = 3;
    Mat rewards(horizon, 1), continues(horizon, 1), values(horizon + 1, 1);
    for (int t = 0; t < horizon; ++t) {
      rewards(t, 0) = rng.normal();
      continues(t, 0) = rng.uniform01();
    }
    for (int t = 0; t <= horizon; ++t) values(t, 0) = rng.normal();
    Mat got = ActorCritic::lambda_returns(rewards, continues, values,
                                          discount, lambda);
    // independent recursion, written directly from the definition
    double next = values(horizon, 0);
    std::vector<double> expect(horizon);
    for (int t = horizon - 1; t >= 0; --t) {
      next = rewards(t, 0) +
             discount * continues(t, 0) *
                 ((1.0 - lambda) * values(t + 1, 0) + lambda * next);
      expect[t] = next;
    }
    for (int t = 0; t < horizon; ++t)
      CHECK(got(t, 0) == doctest::Approx(expect[t]).epsilon(1e-12));
  }
}

TEST_CASE("lambda returns ignore steps appended after termination") {
  Rng rng(29);
  const int horizon = 4;
  Mat rewards(horizon, 1), continues(horizon, 1), values(horizon + 1, 1);
  for (int t = 0; t < horizon; ++t) {
    rewards(t, 0) = rng.normal();
    continues(t, 0) = rng.uniform01();
  }
  continues(horizon - 1, 0) = 0.0;  // terminal
  for (int t = 0; t <= horizon; ++t) values(t, 0) = rng.normal();
  Mat base =
      ActorCritic::lambda_returns(rewards, continues, values, 0.99, 0.95);

  // append zero-reward, zero-continue steps past the terminal
  const int extra = 3;
  Mat rewards2 = Mat::Zero(horizon + extra, 1);
  Mat continues2 = Mat::Zero(horizon + extra, 1);
  Mat values2(horizon + extra + 1, 1);
  for (int t = 0; t <= horizon + extra; ++t) values2(t, 0) = rng.normal();
  rewards2.topRows(horizon) = rewards;
  continues2.topRows(horizon) = continues;
  values2.topRows(horizon + 1) = values;
  Mat padded =
      ActorCritic::lambda_returns(rewards2, continues2, values2, 0.99, 0.95);
  CHECK((padded.topRows(horizon) - base).norm() ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("slow critic follows the critic by the configured fraction") {
  RssmConfig rssm = tiny_rssm();
  Rng init(31);
  WorldModel wm(rssm, init);
  AgentConfig acfg = tiny_agent(rssm);
  acfg.slow_fraction = 0.02;
  ActorCritic ac(acfg, init);

  auto critic_count = ac.critic_params().size();
  auto all = ac.params();
  std::vector<Param*> slow_params(all.end() - critic_count, all.end());
  std::vector<Mat> slow_prev;
  for (Param* p : slow_params) slow_prev.push_back(p->value);

  Rng latent(32), imag(33);
  ImaginedTrajectory traj =
      ac.imagine_rollout(wm, wm.init_state(4, latent), 5, imag);
  ac.update(wm, traj);

  auto critic_now = ac.critic_params();
  for (size_t i = 0; i < slow_params.size(); ++i) {
    Mat expect = 0.98 * slow_prev[i] + 0.02 * critic_now[i]->value;
    CHECK((slow_params[i]->value - expect).norm() ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("actor loss gradient matches finite differences") {
  RssmConfig rssm = tiny_rssm();
  Rng init(41);
  WorldModel wm(rssm, init);
  ActorCritic ac(tiny_agent(rssm), init);
  Rng latent(42), imag(43);
  ImaginedTrajectory traj =
      ac.imagine_rollout(wm, wm.init_state(2, latent), 3, imag);
  Rng arng(44);
  Mat advantage(3, 2);
  for (int t = 0; t < 3; ++t)
    for (int lane = 0; lane < 2; ++lane) advantage(t, lane) = arng.normal();

  auto params = ac.actor_params();
  for (Param* p : params) p->zero_grad();
  ac.actor_loss_eval(wm, traj, advantage, true);

  const double h = 1e-5;
  for (Param* p : params) {
    for (Eigen::Index j = 0; j < p->value.cols(); ++j) {
      for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
        const double keep = p->value(i, j);
        p->value(i, j) = keep + h;
        const double up = ac.actor_loss_eval(wm, traj, advantage, false);
        p->value(i, j) = keep - h;
        const double down = ac.actor_loss_eval(wm, traj, advantage, false);
        p->value(i, j) = keep;
        const double fd = (up - down) / (2.0 * h);
        const double an = p->grad(i, j);
        REQUIRE(std::abs(fd - an) /
                    std::max({1.0, std::abs(fd), std::abs(an)}) <
                1e-3);
      }
    }
  }
}

TEST_CASE("greedy policy converges on a two-armed bandit") {
  AgentConfig cfg;
  cfg.action_dim = 2;
  cfg.feature_dim = 6;
  cfg.units = 16;
  cfg.actor_lr = 3e-3;
  cfg.critic_lr = 3e-3;
  cfg.return_norm = false;
  Rng init(51);

  // features come straight from hand-built states; the model is a bystander
  RssmConfig rssm;
  rssm.obs_dim = 3;
  rssm.action_dim = 2;
  rssm.deter = 2;
  rssm.hidden = 8;
  rssm.units = 8;
  rssm.groups = 1;
  rssm.classes = 4;
  WorldModel wm(rssm, init);
  ActorCritic ac(cfg, init);

  ModelState state;
  state.h = Mat::Zero(2, 32);
  state.z = Mat::Zero(4, 32);
  state.z.row(0).setOnes();
  REQUIRE(wm.feature(state).rows() == cfg.feature_dim);

  Rng draws(52);
  for (int update = 0; update < 500; ++update) {
    // one-step imagined bandit pulls under the current actor
    ImaginedTrajectory traj;
    traj.states = {state, state};
    Mat action = Mat::Zero(2, 32);
    Mat probs = ac.action_probs(wm.feature(state));
    Mat reward(1, 32);
    for (int lane = 0; lane < 32; ++lane) {
      std::vector<double> p(probs.col(lane).data(),
                            probs.col(lane).data() + 2);
      const int arm = draws.categorical(p);
      action(arm, lane) = 1.0;
      reward(0, lane) = arm == 0 ? 1.0 : 0.0;  // arm 0 is the known best
    }
    traj.actions = {action};
    traj.rewards = reward;
    traj.continues = Mat::Zero(1, 32);
    traj.prior_entropies = Mat::Zero(1, 32);
    ac.update(wm, traj);
  }
  ModelState probe;
  probe.h = Mat::Zero(2, 1);
  probe.z = Mat::Zero(4, 1);
  probe.z(0, 0) = 1.0;
  Rng unused(1);
  CHECK(ac.act(wm, probe, ActMode::kGreedy, unused) == 0);
}
