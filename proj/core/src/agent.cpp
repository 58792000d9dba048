#include "entroplan/agent.hpp"

#include <algorithm>
#include <cmath>

#include "entroplan/distmath.hpp"
#include "entroplan/errors.hpp"

namespace entroplan {

ActorCritic::ActorCritic(AgentConfig cfg, Rng& init_rng)
    : cfg_(cfg),
      actor_("ac.actor", cfg.feature_dim, {cfg.units}, cfg.action_dim,
             init_rng),
      critic_("ac.critic", cfg.feature_dim, {cfg.units}, 1, init_rng, 0.0),
      slow_critic_("ac.slow_critic", cfg.feature_dim, {cfg.units}, 1,
                   init_rng, 0.0),
      actor_opt_(cfg.actor_lr, cfg.adam_eps, cfg.grad_clip),
      critic_opt_(cfg.critic_lr, cfg.adam_eps, cfg.grad_clip) {
  // slow critic starts as an exact copy
  auto fast = critic_.params();
  auto slow = slow_critic_.params();
  for (size_t i = 0; i < fast.size(); ++i) slow[i]->value = fast[i]->value;
}

namespace {

Mat softmax_cols(const Mat& logits) {
  Eigen::RowVectorXd mx = logits.colwise().maxCoeff();
  Mat e = (logits.rowwise() - mx).array().exp();
  Eigen::RowVectorXd z = e.colwise().sum();
  return e.array().rowwise() / z.array();
}

}  // namespace

Mat ActorCritic::action_probs(const Mat& features) const {
  Mat p = softmax_cols(actor_.apply(features));
  return (1.0 - cfg_.unimix) * p.array() + cfg_.unimix / cfg_.action_dim;
}

Mat ActorCritic::values(const Mat& features) const {
  return critic_.apply(features);
}

Mat ActorCritic::slow_values(const Mat& features) const {
  return slow_critic_.apply(features);
}

int ActorCritic::act(const WorldModel& wm, const ModelState& state,
                     ActMode mode, Rng& rng, double epsilon) const {
  Mat probs = action_probs(wm.feature(state));
  if (mode == ActMode::kGreedy) {
    Eigen::Index best = 0;
    probs.col(0).maxCoeff(&best);
    return static_cast<int>(best);
  }
  if (epsilon > 0.0 && rng.uniform01() < epsilon)
    return rng.uniform_int(cfg_.action_dim);
  std::vector<double> p(probs.col(0).data(),
                        probs.col(0).data() + cfg_.action_dim);
  return rng.categorical(p);
}

ImaginedTrajectory ActorCritic::imagine_rollout(const WorldModel& wm,
                                                ModelState start, int horizon,
                                                Rng& imag) const {
  if (horizon < 1) throw std::invalid_argument("imagine_rollout: horizon < 1");
  const int lanes = start.batch();
  ImaginedTrajectory traj;
  traj.states.reserve(horizon + 1);
  traj.actions.reserve(horizon);
  traj.rewards.resize(horizon, lanes);
  traj.continues.resize(horizon, lanes);
  traj.prior_entropies.resize(horizon, lanes);
  traj.states.push_back(std::move(start));

  for (int step = 0; step < horizon; ++step) {
    const ModelState& cur = traj.states.back();
    Mat probs = action_probs(wm.feature(cur));
    Mat action = Mat::Zero(cfg_.action_dim, lanes);
    for (int lane = 0; lane < lanes; ++lane) {
      action(imag.categorical(probs.col(lane).data(), cfg_.action_dim),
             lane) = 1.0;
    }
    auto imagined = wm.imagine_step(cur, action, imag);
    auto heads = wm.predict_scalar_heads(imagined.next);
    traj.rewards.row(step) = heads.reward.row(0);
    traj.continues.row(step) = heads.cont.row(0);
    traj.prior_entropies.row(step) =
        entropy_cols(imagined.prior_probs).transpose();
    traj.actions.push_back(std::move(action));
    traj.states.push_back(std::move(imagined.next));
  }
  return traj;
}

Mat ActorCritic::lambda_returns(const Mat& rewards, const Mat& continues,
                                const Mat& values, double discount,
                                double lambda) {
  const int horizon = static_cast<int>(rewards.rows());
  const int lanes = static_cast<int>(rewards.cols());
  if (values.rows() != horizon + 1)
    throw ShapeMismatch("lambda_returns: values must have H+1 rows");
  Mat returns(horizon, lanes);
  Eigen::RowVectorXd next = values.row(horizon);
  for (int step = horizon - 1; step >= 0; --step) {
    Eigen::RowVectorXd blend =
        (1.0 - lambda) * values.row(step + 1) + lambda * next;
    next = rewards.row(step).array() +
           discount * continues.row(step).array() * blend.array();
    returns.row(step) = next;
  }
  return returns;
}

Var ActorCritic::actor_probs_tape(Tape& t, Var features) const {
  Var logits = actor_.apply(t, features);
  return t.add_const(
      t.scale(t.group_softmax(logits, 1, cfg_.action_dim), 1.0 - cfg_.unimix),
      cfg_.unimix / cfg_.action_dim);
}

double ActorCritic::actor_loss_eval(const WorldModel& wm,
                                    const ImaginedTrajectory& traj,
                                    const Mat& advantage,
                                    bool accumulate_grads) {
  const int horizon = traj.horizon();
  const int lanes = traj.lanes();
  Tape t;
  Var acc;
  bool first = true;
  for (int step = 0; step < horizon; ++step) {
    Var feat = t.constant(wm.feature(traj.states[step]));
    Var probs = actor_probs_tape(t, feat);
    Var logp = t.log_(probs);
    Var chosen = t.colwise_sum(t.mul_elem(logp, traj.actions[step]));
    Var weighted = t.mul_elem(chosen, Mat(advantage.row(step)));
    Var entropy = t.scale(t.colwise_sum(t.mul(probs, logp)), -1.0);
    Var gain = t.add(weighted, t.scale(entropy, cfg_.entropy_coef));
    Var summed = t.sum_all(gain);
    acc = first ? summed : t.add(acc, summed);
    first = false;
  }
  Var loss = t.scale(acc, -1.0 / (horizon * lanes));
  if (accumulate_grads) {
    t.backward(loss);
    t.apply_grads();
  }
  return t.scalar(loss);
}

double ActorCritic::critic_loss_eval(const WorldModel& wm,
                                     const ImaginedTrajectory& traj,
                                     const Mat& returns,
                                     bool accumulate_grads) {
  const int horizon = traj.horizon();
  const int lanes = traj.lanes();
  Tape t;
  Var acc;
  bool first = true;
  for (int step = 0; step < horizon; ++step) {
    Var feat = t.constant(wm.feature(traj.states[step]));
    Var v = critic_.apply(t, feat);
    Var err =
        t.scale(t.square(t.sub(v, t.constant(Mat(returns.row(step))))), 0.5);
    Var summed = t.sum_all(err);
    acc = first ? summed : t.add(acc, summed);
    first = false;
  }
  Var loss = t.scale(acc, 1.0 / (horizon * lanes));
  if (accumulate_grads) {
    t.backward(loss);
    t.apply_grads();
  }
  return t.scalar(loss);
}

LossReport ActorCritic::update(const WorldModel& wm,
                               const ImaginedTrajectory& traj) {
  const int horizon = traj.horizon();
  const int lanes = traj.lanes();

  // lambda returns bootstrapped from the slow critic
  Mat values(horizon + 1, lanes);
  for (int i = 0; i <= horizon; ++i)
    values.row(i) = slow_values(wm.feature(traj.states[i])).row(0);
  Mat returns = lambda_returns(traj.rewards, traj.continues, values,
                               cfg_.discount, cfg_.lambda_);

  Mat advantage = returns - values.topRows(horizon);
  if (cfg_.return_norm) {
    std::vector<double> flat(returns.data(), returns.data() + returns.size());
    std::sort(flat.begin(), flat.end());
    const auto quantile = [&](double f) {
      return flat[static_cast<size_t>(f * (flat.size() - 1))];
    };
    const double spread = quantile(0.95) - quantile(0.05);
    return_ema_ =
        return_ema_ == 0.0 ? spread : 0.99 * return_ema_ + 0.01 * spread;
    advantage /= std::max(1.0, return_ema_);
  }

  LossReport report;

  {
    auto ps = actor_.params();
    actor_opt_.zero_grads(ps);
    const double loss = actor_loss_eval(wm, traj, advantage, true);
    if (!std::isfinite(loss)) throw NonFiniteLoss("actor");
    actor_opt_.step(ps);
    report.terms["actor"] = loss;
  }
  {
    auto ps = critic_.params();
    critic_opt_.zero_grads(ps);
    const double loss = critic_loss_eval(wm, traj, returns, true);
    if (!std::isfinite(loss)) throw NonFiniteLoss("critic");
    critic_opt_.step(ps);
    report.terms["critic"] = loss;
  }

  // slow critic EMA: slow <- (1 - f) slow + f fast
  auto fast = critic_.params();
  auto slow = slow_critic_.params();
  for (size_t i = 0; i < fast.size(); ++i) {
    slow[i]->value = (1.0 - cfg_.slow_fraction) * slow[i]->value +
                     cfg_.slow_fraction * fast[i]->value;
  }

  report.terms["return_scale"] = std::max(1.0, return_ema_);
  report.total = report.terms["actor"] + report.terms["critic"];
  return report;
}

std::vector<Param*> ActorCritic::params() {
  std::vector<Param*> ps;
  append_params(ps, actor_.params());
  append_params(ps, critic_.params());
  append_params(ps, slow_critic_.params());
  return ps;
}

std::vector<Param*> ActorCritic::actor_params() { return actor_.params(); }
std::vector<Param*> ActorCritic::critic_params() { return critic_.params(); }

}  // namespace entroplan
