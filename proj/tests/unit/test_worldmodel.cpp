#include <doctest.h>

#include <cmath>

#include "entroplan/distmath.hpp"
#include "entroplan/worldmodel.hpp"

using namespace entroplan;

namespace {

RssmConfig tiny_config() {
  RssmConfig cfg;
  cfg.obs_dim = 3;
  cfg.action_dim = 2;
  cfg.deter = 8;
  cfg.hidden = 8;
  cfg.units = 8;
  cfg.groups = 2;
  cfg.classes = 4;
  return cfg;
}

Mat randn(Rng& rng, int r, int c) {
  Mat m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) m(i, j) = rng.normal();
  return m;
}

Mat onehot_rows(Rng& rng, int dim, int cols) {
  Mat m = Mat::Zero(dim, cols);
  for (int j = 0; j < cols; ++j) m(rng.uniform_int(dim), j) = 1.0;
  return m;
}

SequenceBatch random_batch(Rng& rng, const RssmConfig& cfg, int steps,
                           int lanes) {
  SequenceBatch batch;
  for (int t = 0; t < steps; ++t) {
    batch.obs.push_back(randn(rng, cfg.obs_dim, lanes));
    batch.prev_actions.push_back(onehot_rows(rng, cfg.action_dim, lanes));
  }
  batch.rewards = randn(rng, steps, lanes);
  batch.continues = Mat::Ones(steps, lanes);
  batch.mask = Mat::Ones(steps, lanes);
  return batch;
}

}  // namespace

TEST_CASE("init_state broadcasts the learned start and seeds latents") {
  Rng init(3);
  WorldModel wm(tiny_config(), init);
  Rng latent_a(9), latent_b(9);
  ModelState a = wm.init_state(16, latent_a);
  CHECK(a.batch() == 16);
  // identical initial recurrent state in every lane
  for (int lane = 1; lane < 16; ++lane)
    CHECK((a.h.col(lane) - a.h.col(0)).norm() == doctest::Approx(0.0));
  // one-hot z per group
  for (int lane = 0; lane < 16; ++lane) {
    for (int g = 0; g < 2; ++g) {
      CHECK(a.z.col(lane).segment(g * 4, 4).sum() == doctest::Approx(1.0));
      CHECK(a.z.col(lane).segment(g * 4, 4).maxCoeff() == doctest::Approx(1.0));
    }
  }
  // same seed, same draw
  ModelState b = wm.init_state(16, latent_b);
  CHECK((a.z - b.z).norm() == doctest::Approx(0.0));
}

TEST_CASE("observe_step blends the uniform floor and is seed-deterministic") {
  RssmConfig cfg = tiny_config();
  Rng init(4);
  WorldModel wm(cfg, init);
  Rng latent(11);
  ModelState state = wm.init_state(3, latent);
  const Mat action = Mat::Zero(cfg.action_dim, 3);
  Rng obs_rng(12);
  const Mat obs = randn(obs_rng, cfg.obs_dim, 3);

  Rng la(21), lb(21);
  auto step_a = wm.observe_step(state, action, obs, la);
  auto step_b = wm.observe_step(state, action, obs, lb);
  CHECK((step_a.next.h - step_b.next.h).norm() == doctest::Approx(0.0));
  CHECK((step_a.next.z - step_b.next.z).norm() == doctest::Approx(0.0));

  const double floor = cfg.unimix / cfg.classes;
  CHECK(step_a.prior_probs.minCoeff() >= floor - 1e-15);
  CHECK(step_a.post_probs.minCoeff() >= floor - 1e-15);

  // posterior entropy bounded by G ln K
  Eigen::VectorXd ents = entropy_cols(step_a.post_probs);
  for (int lane = 0; lane < 3; ++lane) {
    CHECK(ents[lane] >= 0.0);
    CHECK(ents[lane] <= cfg.groups * std::log(cfg.classes) + 1e-9);
  }

  CHECK_THROWS_AS(
      wm.observe_step(state, Mat::Zero(cfg.action_dim + 1, 3), obs, la),
      ShapeMismatch);
}

TEST_CASE("fresh prior stays near uniform and hits the exact uniform bound") {
  RssmConfig cfg = tiny_config();
  cfg.groups = 4;
  cfg.classes = 8;
  Rng init(5);
  WorldModel wm(cfg, init);
  Rng latent(6);
  ModelState state = wm.init_state(1, latent);
  auto imagined = wm.imagine_step(state, onehot_rows(latent, cfg.action_dim, 1),
                                  latent);
  const double max_ent = cfg.groups * std::log(cfg.classes);
  CHECK(max_ent == doctest::Approx(8.3177662).epsilon(1e-6));
  const double ent = entropy_cols(imagined.prior_probs)[0];
  CHECK(ent <= max_ent + 1e-9);
  // tiny head output weights keep the untrained prior within 5% of uniform
  CHECK(ent > 0.95 * max_ent);
}

TEST_CASE("predict_heads is pure and bounded") {
  RssmConfig cfg = tiny_config();
  Rng init(7);
  WorldModel wm(cfg, init);
  Rng latent(8);
  ModelState state = wm.init_state(4, latent);
  auto h1 = wm.predict_heads(state);
  auto h2 = wm.predict_heads(state);
  CHECK((h1.reward - h2.reward).norm() == doctest::Approx(0.0));
  CHECK((h1.recon - h2.recon).norm() == doctest::Approx(0.0));
  for (int lane = 0; lane < 4; ++lane) {
    CHECK(h1.cont(0, lane) >= 0.0);
    CHECK(h1.cont(0, lane) <= 1.0);
  }
}

TEST_CASE("training loss gradient matches central finite differences") {
  RssmConfig cfg = tiny_config();
  Rng init(15);
  WorldModel wm(cfg, init);
  Rng data(16);
  SequenceBatch batch = random_batch(data, cfg, 3, 2);

  auto loss = [&](bool grads) {
    return wm.evaluate_loss(batch, nullptr, true, grads).total;
  };
  auto params = wm.params();
  for (Param* p : params) p->zero_grad();
  loss(true);

  const double h = 1e-5;
  double worst = 0.0;
  for (Param* p : params) {
    for (Eigen::Index j = 0; j < p->value.cols(); ++j) {
      for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
        const double keep = p->value(i, j);
        p->value(i, j) = keep + h;
        const double up = loss(false);
        p->value(i, j) = keep - h;
        const double down = loss(false);
        p->value(i, j) = keep;
        const double fd = (up - down) / (2.0 * h);
        const double an = p->grad(i, j);
        const double err =
            std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
        worst = std::max(worst, err);
        INFO(p->name, " entry (", i, ",", j, "): fd=", fd, " analytic=", an);
        REQUIRE(err < 1e-3);
      }
    }
  }
  MESSAGE("worst relative gradient error: ", worst);
}

TEST_CASE("training-path KL equals the distribution library on the same pair") {
  RssmConfig cfg = tiny_config();
  Rng init(19);
  WorldModel wm(cfg, init);
  Rng data(20);
  SequenceBatch batch = random_batch(data, cfg, 1, 1);

  Rng latent_train(33);
  LossReport report = wm.evaluate_loss(batch, &latent_train, false, false);

  // replicate the single step through the inference path with the same
  // latent stream, then evaluate the KL with the distribution library
  Rng latent_infer(33);
  ModelState state = wm.init_state(1, latent_infer);
  auto step = wm.observe_step(state, batch.prev_actions[0], batch.obs[0],
                              latent_infer);
  auto pair = wm.lane_pair(step, 0);
  const double lib_kl = kl_divergence(pair.posterior, pair.prior);
  CHECK(report.terms.at("kl_raw") == doctest::Approx(lib_kl).epsilon(1e-6));
}

TEST_CASE("free bits floor the balanced KL terms on a fresh model") {
  RssmConfig cfg = tiny_config();
  Rng init(23);
  WorldModel wm(cfg, init);
  Rng data(24);
  SequenceBatch batch = random_batch(data, cfg, 2, 2);
  Rng latent(25);
  LossReport report = wm.evaluate_loss(batch, &latent, false, false);
  // fresh prior and posterior are both near uniform: raw KL << kl_free, so
  // the clipped contributions sit exactly at the floor, in the 0.5 : 0.1
  // balance ratio
  CHECK(report.terms.at("kl_raw") < cfg.kl_free);
  CHECK(report.terms.at("dyn") ==
        doctest::Approx(cfg.dyn_scale * cfg.kl_free).epsilon(1e-12));
  CHECK(report.terms.at("rep") ==
        doctest::Approx(cfg.rep_scale * cfg.kl_free).epsilon(1e-12));
  CHECK(report.terms.at("dyn") / report.terms.at("rep") ==
        doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("a fixed cyclic world becomes predictable") {
  RssmConfig cfg;
  cfg.obs_dim = 5;
  cfg.action_dim = 1;
  cfg.deter = 16;
  cfg.hidden = 16;
  cfg.units = 16;
  cfg.groups = 2;
  cfg.classes = 4;
  cfg.lr = 3e-3;
  // no free-bits floor: this test measures how far the KL itself can drop
  cfg.kl_free = 0.0;
  Rng init(31);
  WorldModel wm(cfg, init);
  Rng rng(32);

  const int steps = 16, lanes = 4;
  auto make_batch = [&] {
    SequenceBatch batch;
    std::vector<int> phase(lanes);
    for (int& p : phase) p = rng.uniform_int(5);
    for (int t = 0; t < steps; ++t) {
      Mat obs = Mat::Zero(5, lanes);
      for (int lane = 0; lane < lanes; ++lane)
        obs((phase[lane] + t) % 5, lane) = 1.0;
      batch.obs.push_back(obs);
      batch.prev_actions.push_back(Mat::Ones(1, lanes));
    }
    batch.rewards = Mat::Zero(steps, lanes);
    batch.continues = Mat::Ones(steps, lanes);
    batch.mask = Mat::Ones(steps, lanes);
    return batch;
  };

  double recent_kl = 0.0;
  for (int update = 0; update < 2000; ++update) {
    auto batch = make_batch();
    LossReport report = wm.train_step(batch, rng);
    if (update >= 1950) recent_kl += report.terms.at("kl_raw") / 50.0;
  }
  // average posterior-prior KL settles well under 0.2 nats; the first step
  // of each sequence keeps an irreducible ~ln(5)/16 share from the unknown
  // starting phase
  CHECK(recent_kl < 0.2);
}

TEST_CASE("parameters stay finite over many updates on random data") {
  RssmConfig cfg = tiny_config();
  Rng init(41);
  WorldModel wm(cfg, init);
  Rng rng(42);
  for (int update = 0; update < 10000; ++update) {
    SequenceBatch batch = random_batch(rng, cfg, 4, 2);
    LossReport report = wm.train_step(batch, rng);
    REQUIRE(std::isfinite(report.total));
  }
  for (Param* p : wm.params()) REQUIRE(p->value.allFinite());
}

TEST_CASE("reward head overfits a constant reward") {
  RssmConfig cfg = tiny_config();
  cfg.lr = 3e-3;
  Rng init(51);
  WorldModel wm(cfg, init);
  Rng rng(52);
  SequenceBatch batch = random_batch(rng, cfg, 4, 4);
  batch.rewards = Mat::Constant(4, 4, 1.0);

  ModelState posteriors;
  for (int update = 0; update < 600; ++update)
    wm.train_step(batch, rng, &posteriors);
  auto heads = wm.predict_heads(posteriors);
  const double mean_pred = heads.reward.mean();
  CHECK(mean_pred == doctest::Approx(1.0).epsilon(0.10));
}
