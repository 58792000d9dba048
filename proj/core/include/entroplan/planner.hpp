#pragma once

#include <optional>
#include <vector>

#include "entroplan/agent.hpp"

namespace entroplan {

// One imagined candidate: the action sequence, its summed predicted reward
// and prior entropy, the combined score, and the model feature at the end of
// the rollout.
struct ScoredTrajectory {
  std::vector<int> actions;
  double cum_reward = 0.0;
  double cum_entropy = 0.0;  // nats
  double score = 0.0;
  Eigen::VectorXd final_feature;
};

// A committed action sequence being executed, with a cursor into it.
struct Plan {
  std::vector<int> actions;
  int cursor = 0;
  Eigen::VectorXd final_feature;
  bool active = false;

  int length() const { return static_cast<int>(actions.size()); }
  // cursor / length, in [0, 1]; reported to the meta-planner
  double position() const {
    return actions.empty() ? 0.0
                           : static_cast<double>(cursor) / length();
  }
};

// Returns the next action and advances the cursor; returns nullopt once the
// plan is exhausted (and stays exhausted on repeat calls).
std::optional<int> advance_plan(Plan& plan);

struct PlannerConfig {
  int choices = 256;       // candidate rollouts per planning call
  int horizon = 16;
  int capacity = 0;        // batched lane capacity; 0 means `choices`
  double rew_multiplier = 1.0;
  double ent_multiplier = 1.0;
  bool mean_aggregate = false;  // average instead of sum over the horizon
};

// score = rew_mult * cum_reward + ent_mult * cum_entropy
double score_trajectory(double cum_reward, double cum_entropy,
                        double rew_multiplier, double ent_multiplier);

// Argmax-score candidate becomes the plan; ties break to the lowest index.
Plan select_plan(const std::vector<ScoredTrajectory>& candidates);

// Generates candidate rollouts from a single start state. All lanes advance
// through one batched model forward per step; the workspace is padded to
// `capacity` lanes so the call cost is set by the horizon, not the candidate
// count. Read-only on model and actor parameters.
class Planner {
 public:
  explicit Planner(PlannerConfig cfg) : cfg_(cfg) {
    if (cfg_.capacity <= 0) cfg_.capacity = cfg_.choices;
  }

  const PlannerConfig& config() const { return cfg_; }

  std::vector<ScoredTrajectory> generate_candidates(const WorldModel& wm,
                                                    const ActorCritic& actor,
                                                    const ModelState& start,
                                                    int n, int horizon,
                                                    Rng& imag) const;

  // Full planning call: generate, score, select.
  Plan plan(const WorldModel& wm, const ActorCritic& actor,
            const ModelState& start, Rng& imag) const;

  double last_call_seconds() const { return last_seconds_; }

 private:
  PlannerConfig cfg_;
  mutable double last_seconds_ = 0.0;
};

}  // namespace entroplan
