#include <doctest.h>

#include <sstream>

#include "entroplan/replay.hpp"

using namespace entroplan;

namespace {

Eigen::VectorXd obs_tagged(double episode_tag, double step_tag, int dim = 4) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
  v[0] = episode_tag;
  v[1] = step_tag;
  return v;
}

}  // namespace

TEST_CASE("sequences stay inside one episode and keep steps contiguous") {
  ReplayBuffer buffer(10000, 4, 3);
  Rng rng(3);
  for (int ep = 1; ep <= 5; ++ep) {
    buffer.begin_episode();
    const int len = 10 + 5 * ep;
    for (int t = 0; t < len; ++t)
      buffer.add(obs_tagged(ep, t), t % 3, 0.1 * t, t + 1 < len);
    buffer.end_episode();
  }

  for (int rep = 0; rep < 200; ++rep) {
    SequenceBatch batch = buffer.sample(3, 8, rng);
    for (int lane = 0; lane < 3; ++lane) {
      double episode_tag = 0.0;
      double prev_step = -1.0;
      for (int t = 0; t < 8; ++t) {
        if (batch.mask(t, lane) == 0.0) continue;
        const double tag = batch.obs[t](0, lane);
        const double step_tag = batch.obs[t](1, lane);
        if (episode_tag == 0.0) episode_tag = tag;
        CHECK(tag == episode_tag);
        if (prev_step >= 0.0) CHECK(step_tag == prev_step + 1.0);
        prev_step = step_tag;
      }
    }
  }
}

TEST_CASE("previous actions align with the stored step before each obs") {
  ReplayBuffer buffer(100, 4, 3);
  buffer.begin_episode();
  const int actions[5] = {2, 0, 1, 2, 1};
  for (int t = 0; t < 5; ++t)
    buffer.add(obs_tagged(1, t), actions[t], 0.0, t < 4);
  buffer.end_episode();

  Rng rng(5);
  SequenceBatch batch = buffer.sample(1, 5, rng);
  // the window must start at 0 (episode length equals the window)
  CHECK(batch.obs[0](1, 0) == 0.0);
  CHECK(batch.prev_actions[0].col(0).sum() == 0.0);  // episode start
  for (int t = 1; t < 5; ++t) {
    CHECK(batch.prev_actions[t](actions[t - 1], 0) == 1.0);
    CHECK(batch.prev_actions[t].col(0).sum() == 1.0);
  }
}

TEST_CASE("short episodes pad with done-flagged zero steps") {
  ReplayBuffer buffer(100, 4, 3);
  buffer.begin_episode();
  for (int t = 0; t < 3; ++t) buffer.add(obs_tagged(1, t), 0, 1.0, t < 2);
  buffer.end_episode();

  Rng rng(7);
  SequenceBatch batch = buffer.sample(2, 6, rng);
  for (int lane = 0; lane < 2; ++lane) {
    for (int t = 0; t < 3; ++t) CHECK(batch.mask(t, lane) == 1.0);
    for (int t = 3; t < 6; ++t) {
      CHECK(batch.mask(t, lane) == 0.0);
      CHECK(batch.continues(t, lane) == 0.0);
      CHECK(batch.obs[t].col(lane).norm() == 0.0);
    }
  }
}

TEST_CASE("capacity evicts whole oldest episodes first") {
  ReplayBuffer buffer(100, 4, 3);
  for (int ep = 0; ep < 5; ++ep) {
    buffer.begin_episode();
    for (int t = 0; t < 30; ++t)
      buffer.add(obs_tagged(ep + 1, t), 0, 0.0, true);
    buffer.end_episode();
  }
  CHECK(buffer.steps() <= 100 + 30);
  CHECK(buffer.episodes() < 5);
  // newest episodes survive: sampling long windows only sees late tags
  Rng rng(9);
  for (int rep = 0; rep < 50; ++rep) {
    SequenceBatch batch = buffer.sample(1, 4, rng);
    CHECK(batch.obs[0](0, 0) >= 2.0);
  }
}

TEST_CASE("save and load reproduce identical samples") {
  ReplayBuffer buffer(1000, 4, 3);
  Rng fill(11);
  for (int ep = 0; ep < 4; ++ep) {
    buffer.begin_episode();
    for (int t = 0; t < 20; ++t)
      buffer.add(obs_tagged(ep, t) * fill.uniform01(), fill.uniform_int(3),
                 fill.normal(), t < 19);
    buffer.end_episode();
  }
  BlobWriter w;
  buffer.save(w);
  ReplayBuffer restored(1, 1, 1);
  BlobReader r(w.payload());
  restored.load(r);

  Rng ra(13), rb(13);
  for (int rep = 0; rep < 10; ++rep) {
    SequenceBatch a = buffer.sample(2, 8, ra);
    SequenceBatch b = restored.sample(2, 8, rb);
    CHECK((a.rewards - b.rewards).norm() == 0.0);
    CHECK((a.mask - b.mask).norm() == 0.0);
    for (int t = 0; t < 8; ++t) {
      CHECK((a.obs[t] - b.obs[t]).norm() == 0.0);
      CHECK((a.prev_actions[t] - b.prev_actions[t]).norm() == 0.0);
    }
  }
}
