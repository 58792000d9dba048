#pragma once

#include "entroplan/worldmodel.hpp"

namespace entroplan {

struct AgentConfig {
  int action_dim = 0;
  int feature_dim = 0;
  int units = 128;
  double actor_lr = 3e-5;
  double critic_lr = 3e-5;
  double adam_eps = 1e-5;
  double grad_clip = 100.0;
  double entropy_coef = 3e-4;
  double unimix = 0.01;
  double slow_fraction = 0.02;
  double discount = 0.997;
  double lambda_ = 0.95;
  bool return_norm = true;  // scale advantages by an EMA of the return range
};

// A batch of imagined rollouts: H actions between H+1 states, with the
// predicted reward, continue probability, and prior entropy recorded at each
// imagined successor. prior_entropies.row(i) is the entropy of the prior that
// produced states[i + 1].
struct ImaginedTrajectory {
  std::vector<ModelState> states;  // H + 1
  std::vector<Mat> actions;        // H of action_dim x B, one-hot
  Mat rewards;                     // H x B
  Mat continues;                   // H x B
  Mat prior_entropies;             // H x B, nats

  int horizon() const { return static_cast<int>(actions.size()); }
  int lanes() const { return static_cast<int>(rewards.cols()); }
};

enum class ActMode { kGreedy, kSample };

// Greedy actor and critic trained exclusively on imagined trajectories; the
// update interface accepts nothing else. Action proposals for the planner and
// environment collection both come from here.
class ActorCritic {
 public:
  ActorCritic(AgentConfig cfg, Rng& init_rng);

  const AgentConfig& config() const { return cfg_; }

  // Unimix-blended action probabilities, one column per lane.
  Mat action_probs(const Mat& features) const;
  Mat values(const Mat& features) const;       // 1 x B
  Mat slow_values(const Mat& features) const;  // 1 x B

  // Single-lane action selection. epsilon only applies in sample mode and
  // draws a uniform action with that probability (collection-time dithering).
  int act(const WorldModel& wm, const ModelState& state, ActMode mode,
          Rng& rng, double epsilon = 0.0) const;

  // Rolls the actor and the model forward `horizon` steps from `start`,
  // sampling actions from the actor distribution in every lane.
  ImaginedTrajectory imagine_rollout(const WorldModel& wm, ModelState start,
                                     int horizon, Rng& imag) const;

  // TD(lambda) recursion over predicted rewards and continues.
  // values is (H+1) x B with values.row(H) the bootstrap.
  static Mat lambda_returns(const Mat& rewards, const Mat& continues,
                            const Mat& values, double discount, double lambda);

  // One actor and critic update from freshly imagined trajectories. The
  // actor follows the policy-gradient of the lambda-return estimate with an
  // entropy bonus; the critic regresses the returns; the slow critic tracks
  // the critic by EMA.
  LossReport update(const WorldModel& wm, const ImaginedTrajectory& traj);

  // Loss evaluators over a frozen trajectory; used by update() and by
  // gradient checks. Gradients land on the respective head's parameters.
  double actor_loss_eval(const WorldModel& wm, const ImaginedTrajectory& traj,
                         const Mat& advantage, bool accumulate_grads);
  double critic_loss_eval(const WorldModel& wm, const ImaginedTrajectory& traj,
                          const Mat& returns, bool accumulate_grads);

  std::vector<Param*> params();       // actor + critic + slow critic
  std::vector<Param*> actor_params();
  std::vector<Param*> critic_params();
  Adam& actor_optimizer() { return actor_opt_; }
  Adam& critic_optimizer() { return critic_opt_; }
  double return_scale_ema() const { return return_ema_; }
  void set_return_scale_ema(double v) { return_ema_ = v; }

 private:
  Var actor_probs_tape(Tape& t, Var features) const;

  AgentConfig cfg_;
  Mlp actor_;
  Mlp critic_;
  Mlp slow_critic_;
  Adam actor_opt_;
  Adam critic_opt_;
  double return_ema_ = 0.0;
};

}  // namespace entroplan
