#pragma once

#include <deque>
#include <optional>

#include "entroplan/nn.hpp"
#include "entroplan/worldmodel.hpp"

namespace entroplan {

// Concatenation layout version for the meta observation; bump when the field
// order or contents change so stored transitions cannot be misread.
inline constexpr int kMetaObsLayoutVersion = 1;

// Inputs to the replan/commit decision, concatenated in this fixed order:
// encoder embedding, model feature, normalized episode step, greedy action
// one-hot, normalized plan position, in-plan flag, and the feature predicted
// at the end of the active plan.
struct MetaObservation {
  Eigen::VectorXd encoder_embedding;
  Eigen::VectorXd rssm_feature;
  double step_normalized = 0.0;  // current step / episode time limit
  Eigen::VectorXd greedy_action;
  double plan_position_normalized = 0.0;
  double in_plan = 0.0;
  Eigen::VectorXd final_feature;

  Eigen::VectorXd concat() const;
  static int dim(int embed_dim, int feature_dim, int action_dim);
};

// One replan decision record.
struct MetaTransition {
  Eigen::VectorXd obs;       // concatenated MetaObservation
  int action = 0;            // index into the p grid
  double log_prob = 0.0;
  bool implemented = false;  // whether a replan actually happened this step
  double step_entropy = 0.0;  // realized prior entropy at this step, nats
  double next_base_reward = 0.0;
  bool done = false;
};

// FIFO ring of meta transitions.
class MetaBuffer {
 public:
  explicit MetaBuffer(size_t capacity) : capacity_(capacity) {}

  void push(MetaTransition t);
  size_t size() const { return items_.size(); }
  size_t capacity() const { return capacity_; }
  const MetaTransition& at(size_t i) const { return items_[i]; }
  MetaTransition& at(size_t i) { return items_[i]; }
  void clear() { items_.clear(); }

  const std::deque<MetaTransition>& items() const { return items_; }

 private:
  size_t capacity_;
  std::deque<MetaTransition> items_;
};

// Sequence-level meta reward: (L/2) * sum over the window of
// (rew_mult * base_reward + ent_mult * prior_entropy). The window must hold
// L+1 entries unless a terminal truncates it; otherwise ShortWindow.
double meta_reward(const std::vector<std::pair<double, double>>& window,
                   int seq_length, bool ends_with_done,
                   double rew_multiplier = 1.0, double ent_multiplier = 1.0);

// Generalized advantage estimation. values has one entry per reward plus a
// bootstrap at the end. Returns advantages and value targets (adv + value).
struct GaeResult {
  Eigen::VectorXd advantages;
  Eigen::VectorXd value_targets;
};
GaeResult compute_gae(const Eigen::VectorXd& rewards,
                      const Eigen::VectorXd& values, double bootstrap,
                      const std::vector<bool>& dones, double gamma,
                      double lambda);

struct MetaConfig {
  int obs_dim = 0;
  int num_cells = 256;
  int action_quant = 5;  // grid {0, 0.25, 0.5, 0.75, 1}
  double lr = 0.003;
  double adam_eps = 1e-8;
  double grad_clip = 10.0;
  double clip_epsilon = 0.2;
  double gamma = 0.99;
  double lambda_ = 0.95;
  double entropy_coef = 0.1;  // naive entropy bonus
  int num_epochs = 30;
  int sub_batch_size = 64;
  int seq_length = 8;
  double rew_multiplier = 1.0;
  double ent_multiplier = 1.0;
};

// Small PPO head over meta observations. The actor outputs a categorical over
// quantized replan probabilities p; the squashed rule replans when a uniform
// draw falls below p^2.
class MetaPolicy {
 public:
  MetaPolicy(MetaConfig cfg, Rng& init_rng);

  const MetaConfig& config() const { return cfg_; }

  double p_value(int index) const {
    return static_cast<double>(index) / (cfg_.action_quant - 1);
  }

  Eigen::VectorXd action_probs(const Eigen::VectorXd& obs) const;
  double value(const Eigen::VectorXd& obs) const;
  Mat values_batch(const Mat& obs) const;  // 1 x B

  struct Decision {
    int p_index = 0;
    double p = 0.0;
    double log_prob = 0.0;
    bool replan = false;
  };
  Decision decide_replan(const Eigen::VectorXd& obs, Rng& meta) const;

  // The squashing rule alone: replan iff u < p^2.
  static bool replan_draw(double p, Rng& meta);

  // Clipped-surrogate PPO over every transition in the buffer whose meta
  // reward window is complete. Requires at least `min_transitions` usable
  // transitions; returns nullopt (and trains nothing) below that.
  std::optional<LossReport> ppo_update(const MetaBuffer& buffer,
                                       size_t min_transitions);

  // Surrogate loss pieces exposed for gradient checking: evaluates the
  // clipped objective on a fixed batch, optionally accumulating gradients.
  double actor_loss_eval(const Mat& obs, const std::vector<int>& actions,
                         const Eigen::VectorXd& old_log_probs,
                         const Eigen::VectorXd& advantages,
                         bool accumulate_grads);
  double critic_loss_eval(const Mat& obs, const Eigen::VectorXd& targets,
                          bool accumulate_grads);

  std::vector<Param*> params();
  std::vector<Param*> actor_params();
  std::vector<Param*> critic_params();
  Adam& actor_optimizer() { return actor_opt_; }
  Adam& critic_optimizer() { return critic_opt_; }

 private:
  MetaConfig cfg_;
  Mlp actor_;
  Mlp critic_;
  Adam actor_opt_;
  Adam critic_opt_;
};

// Builds per-transition meta rewards over the buffer. Entry i is set when the
// window starting at i is complete (L+1 entries or terminal-truncated);
// nullopt otherwise.
std::vector<std::optional<double>> meta_rewards_over_buffer(
    const MetaBuffer& buffer, int seq_length, double rew_multiplier,
    double ent_multiplier);

}  // namespace entroplan
