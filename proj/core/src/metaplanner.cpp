#include "entroplan/metaplanner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "entroplan/errors.hpp"

namespace entroplan {

Eigen::VectorXd MetaObservation::concat() const {
  const Eigen::Index n = encoder_embedding.size() + rssm_feature.size() + 1 +
                         greedy_action.size() + 1 + 1 + final_feature.size();
  Eigen::VectorXd out(n);
  Eigen::Index at = 0;
  out.segment(at, encoder_embedding.size()) = encoder_embedding;
  at += encoder_embedding.size();
  out.segment(at, rssm_feature.size()) = rssm_feature;
  at += rssm_feature.size();
  out[at++] = step_normalized;
  out.segment(at, greedy_action.size()) = greedy_action;
  at += greedy_action.size();
  out[at++] = plan_position_normalized;
  out[at++] = in_plan;
  out.segment(at, final_feature.size()) = final_feature;
  return out;
}

int MetaObservation::dim(int embed_dim, int feature_dim, int action_dim) {
  return embed_dim + feature_dim + 1 + action_dim + 1 + 1 + feature_dim;
}

void MetaBuffer::push(MetaTransition t) {
  items_.push_back(std::move(t));
  while (items_.size() > capacity_) items_.pop_front();
}

double meta_reward(const std::vector<std::pair<double, double>>& window,
                   int seq_length, bool ends_with_done, double rew_multiplier,
                   double ent_multiplier) {
  if (static_cast<int>(window.size()) < seq_length + 1 && !ends_with_done)
    throw ShortWindow("meta_reward: window shorter than L+1 without terminal");
  double sum = 0.0;
  for (const auto& [base_reward, entropy] : window)
    sum += rew_multiplier * base_reward + ent_multiplier * entropy;
  return 0.5 * seq_length * sum;
}

GaeResult compute_gae(const Eigen::VectorXd& rewards,
                      const Eigen::VectorXd& values, double bootstrap,
                      const std::vector<bool>& dones, double gamma,
                      double lambda) {
  const Eigen::Index n = rewards.size();
  if (values.size() != n || static_cast<Eigen::Index>(dones.size()) != n)
    throw ShapeMismatch("compute_gae: input lengths disagree");
  GaeResult out;
  out.advantages.resize(n);
  out.value_targets.resize(n);
  double next_adv = 0.0;
  double next_value = bootstrap;
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    const double not_done = dones[i] ? 0.0 : 1.0;
    const double delta =
        rewards[i] + gamma * not_done * next_value - values[i];
    next_adv = delta + gamma * lambda * not_done * next_adv;
    out.advantages[i] = next_adv;
    out.value_targets[i] = next_adv + values[i];
    next_value = values[i];
  }
  return out;
}

MetaPolicy::MetaPolicy(MetaConfig cfg, Rng& init_rng)
    : cfg_(cfg),
      actor_("meta.actor", cfg.obs_dim, {cfg.num_cells}, cfg.action_quant,
             init_rng, 0.1, Init::kHe),
      critic_("meta.critic", cfg.obs_dim, {cfg.num_cells}, 1, init_rng, 0.0,
              Init::kHe),
      actor_opt_(cfg.lr, cfg.adam_eps, cfg.grad_clip),
      critic_opt_(cfg.lr, cfg.adam_eps, cfg.grad_clip) {
  // Bias the initial logits toward the intermediate p grid values so fresh
  // policies favour partial commitment over the extremes.
  Mat& bias = actor_.out.b.value;
  for (int i = 1; i + 1 < cfg_.action_quant; ++i) bias(i, 0) = 1.0;
}

Eigen::VectorXd MetaPolicy::action_probs(const Eigen::VectorXd& obs) const {
  Mat logits = actor_.apply(obs);
  Eigen::VectorXd shifted =
      logits.col(0).array() - logits.col(0).maxCoeff();
  Eigen::VectorXd e = shifted.array().exp();
  return e / e.sum();
}

double MetaPolicy::value(const Eigen::VectorXd& obs) const {
  return critic_.apply(obs)(0, 0);
}

Mat MetaPolicy::values_batch(const Mat& obs) const {
  return critic_.apply(obs);
}

bool MetaPolicy::replan_draw(double p, Rng& meta) {
  return meta.uniform01() < p * p;
}

MetaPolicy::Decision MetaPolicy::decide_replan(const Eigen::VectorXd& obs,
                                               Rng& meta) const {
  Eigen::VectorXd probs = action_probs(obs);
  std::vector<double> p(probs.data(), probs.data() + probs.size());
  Decision d;
  d.p_index = meta.categorical(p);
  d.p = p_value(d.p_index);
  d.log_prob = std::log(std::max(probs[d.p_index], 1e-300));
  d.replan = replan_draw(d.p, meta);
  return d;
}

std::vector<std::optional<double>> meta_rewards_over_buffer(
    const MetaBuffer& buffer, int seq_length, double rew_multiplier,
    double ent_multiplier) {
  const size_t n = buffer.size();
  std::vector<std::optional<double>> out(n);
  std::vector<std::pair<double, double>> window;
  for (size_t i = 0; i < n; ++i) {
    window.clear();
    bool done_inside = false;
    for (size_t j = i; j < n && static_cast<int>(window.size()) < seq_length + 1;
         ++j) {
      const MetaTransition& tr = buffer.at(j);
      window.emplace_back(tr.next_base_reward, tr.step_entropy);
      if (tr.done) {
        done_inside = true;
        break;
      }
    }
    if (static_cast<int>(window.size()) == seq_length + 1 || done_inside) {
      out[i] = meta_reward(window, seq_length, done_inside, rew_multiplier,
                           ent_multiplier);
    }
  }
  return out;
}

double MetaPolicy::actor_loss_eval(const Mat& obs,
                                   const std::vector<int>& actions,
                                   const Eigen::VectorXd& old_log_probs,
                                   const Eigen::VectorXd& advantages,
                                   bool accumulate_grads) {
  const int n = static_cast<int>(actions.size());
  Mat onehot = Mat::Zero(cfg_.action_quant, n);
  for (int i = 0; i < n; ++i) onehot(actions[i], i) = 1.0;
  Mat old_lp(1, n), adv(1, n);
  for (int i = 0; i < n; ++i) {
    old_lp(0, i) = old_log_probs[i];
    adv(0, i) = advantages[i];
  }

  Tape t;
  Var logits = actor_.apply(t, t.constant(obs));
  Var probs = t.group_softmax(logits, 1, cfg_.action_quant);
  Var logp_all = t.log_(probs);
  Var logp = t.colwise_sum(t.mul_elem(logp_all, onehot));
  Var ratio = t.exp_(t.sub(logp, t.constant(old_lp)));
  Var surr1 = t.mul_elem(ratio, adv);
  Var surr2 = t.mul_elem(
      t.clamp(ratio, 1.0 - cfg_.clip_epsilon, 1.0 + cfg_.clip_epsilon), adv);
  Var clipped = t.minimum(surr1, surr2);
  Var entropy = t.scale(t.colwise_sum(t.mul(probs, logp_all)), -1.0);
  Var gain = t.add(clipped, t.scale(entropy, cfg_.entropy_coef));
  Var loss = t.scale(t.mean_all(gain), -1.0);
  if (accumulate_grads) {
    t.backward(loss);
    t.apply_grads();
  }
  return t.scalar(loss);
}

double MetaPolicy::critic_loss_eval(const Mat& obs,
                                    const Eigen::VectorXd& targets,
                                    bool accumulate_grads) {
  Mat tgt(1, targets.size());
  tgt.row(0) = targets.transpose();
  Tape t;
  Var v = critic_.apply(t, t.constant(obs));
  Var loss = t.scale(t.mean_all(t.square(t.sub(v, t.constant(tgt)))), 0.5);
  if (accumulate_grads) {
    t.backward(loss);
    t.apply_grads();
  }
  return t.scalar(loss);
}

std::optional<LossReport> MetaPolicy::ppo_update(const MetaBuffer& buffer,
                                                 size_t min_transitions) {
  // usable = transitions with a complete meta-reward window
  auto rewards = meta_rewards_over_buffer(buffer, cfg_.seq_length,
                                          cfg_.rew_multiplier,
                                          cfg_.ent_multiplier);
  size_t usable = 0;
  while (usable < rewards.size() && rewards[usable].has_value()) ++usable;
  if (usable < min_transitions) return std::nullopt;

  const int n = static_cast<int>(usable);
  Mat obs(buffer.at(0).obs.size(), n);
  Eigen::VectorXd meta_r(n), old_lp(n);
  std::vector<int> actions(n);
  std::vector<bool> dones(n);
  for (int i = 0; i < n; ++i) {
    const MetaTransition& tr = buffer.at(i);
    obs.col(i) = tr.obs;
    meta_r[i] = *rewards[i];
    old_lp[i] = tr.log_prob;
    actions[i] = tr.action;
    dones[i] = tr.done;
  }

  Eigen::VectorXd values = values_batch(obs).row(0).transpose();
  const double bootstrap =
      (static_cast<size_t>(n) < buffer.size() && !dones[n - 1])
          ? value(buffer.at(n).obs)
          : 0.0;
  GaeResult gae =
      compute_gae(meta_r, values, bootstrap, dones, cfg_.gamma, cfg_.lambda_);

  // standardize advantages across the update
  Eigen::VectorXd adv = gae.advantages;
  const double mean = adv.mean();
  const double stddev =
      std::sqrt((adv.array() - mean).square().sum() /
                std::max<Eigen::Index>(1, adv.size() - 1));
  adv = (adv.array() - mean) / (stddev > 1e-8 ? stddev : 1.0);

  LossReport report;
  double actor_loss_last = 0.0, critic_loss_last = 0.0;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  // deterministic epoch shuffling keyed off buffer contents
  Rng shuffle_rng(fnv1a64("meta_ppo") ^ static_cast<uint64_t>(n) ^
                  actor_opt_.steps_taken());

  for (int epoch = 0; epoch < cfg_.num_epochs; ++epoch) {
    for (int i = n - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.uniform_int(i + 1)]);
    for (int start = 0; start < n; start += cfg_.sub_batch_size) {
      const int count = std::min(cfg_.sub_batch_size, n - start);
      Mat sub_obs(obs.rows(), count);
      std::vector<int> sub_act(count);
      Eigen::VectorXd sub_old(count), sub_adv(count), sub_tgt(count);
      for (int i = 0; i < count; ++i) {
        const int src = order[start + i];
        sub_obs.col(i) = obs.col(src);
        sub_act[i] = actions[src];
        sub_old[i] = old_lp[src];
        sub_adv[i] = adv[src];
        sub_tgt[i] = gae.value_targets[src];
      }
      {
        auto ps = actor_.params();
        actor_opt_.zero_grads(ps);
        actor_loss_last =
            actor_loss_eval(sub_obs, sub_act, sub_old, sub_adv, true);
        if (!std::isfinite(actor_loss_last)) throw NonFiniteLoss("meta_actor");
        actor_opt_.step(ps);
      }
      {
        auto ps = critic_.params();
        critic_opt_.zero_grads(ps);
        critic_loss_last = critic_loss_eval(sub_obs, sub_tgt, true);
        if (!std::isfinite(critic_loss_last))
          throw NonFiniteLoss("meta_critic");
        critic_opt_.step(ps);
      }
    }
  }

  report.terms["meta_actor"] = actor_loss_last;
  report.terms["meta_critic"] = critic_loss_last;
  report.terms["meta_transitions"] = static_cast<double>(n);
  report.total = actor_loss_last + critic_loss_last;
  return report;
}

std::vector<Param*> MetaPolicy::params() {
  std::vector<Param*> ps;
  append_params(ps, actor_.params());
  append_params(ps, critic_.params());
  return ps;
}

std::vector<Param*> MetaPolicy::actor_params() { return actor_.params(); }
std::vector<Param*> MetaPolicy::critic_params() { return critic_.params(); }

}  // namespace entroplan
