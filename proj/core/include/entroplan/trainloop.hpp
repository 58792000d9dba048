#pragma once

#include <memory>
#include <string>

#include "entroplan/agent.hpp"
#include "entroplan/config.hpp"
#include "entroplan/environment.hpp"
#include "entroplan/metaplanner.hpp"
#include "entroplan/metrics.hpp"
#include "entroplan/planner.hpp"
#include "entroplan/replay.hpp"

namespace entroplan {

enum class AblationMode { kNone, kMpc, kEntropyOnly, kRewardOnly, kMixed };

AblationMode ablation_mode_from_string(const std::string& name);
// Applies the mode's config overrides (multipliers, step budget).
Config apply_ablation(Config cfg, AblationMode mode);

std::unique_ptr<Environment> make_env(const Config& cfg);

struct RunResult {
  std::string run_dir;
  int64_t steps_completed = 0;
  int64_t episodes = 0;
};

// One training run: a single environment instance, the world model and
// actor-critic trained from replay at the configured ratio, and (with
// use_plan) the entropy-seeking planner gated by the PPO meta-policy. The
// loop is single-threaded; all randomness flows through named streams so
// identical config and seed reproduce identical metric streams.
class TrainRun {
 public:
  TrainRun(Config cfg, std::string run_dir,
           AblationMode mode = AblationMode::kNone);

  // Runs until cfg.steps environment steps are completed.
  RunResult run();
  // Executes at most `max_steps` further environment steps (for tests).
  RunResult run_steps(int64_t max_steps);

  void save_checkpoint(const std::string& path);
  void load_checkpoint(const std::string& path);

  int64_t step() const { return step_; }
  const Config& config() const { return cfg_; }
  const WorldModel& world_model() const { return *wm_; }
  const ActorCritic& actor_critic() const { return *ac_; }

 private:
  void reset_episode();
  void one_step();
  void training_updates();
  void flush_episode_record(bool done_by_goals);
  Eigen::VectorXd build_meta_obs() const;
  Mat action_onehot(int action) const;

  Config cfg_;
  AblationMode mode_;
  std::string run_dir_;
  RngPool rngs_;
  std::unique_ptr<Environment> env_;
  std::unique_ptr<WorldModel> wm_;
  std::unique_ptr<ActorCritic> ac_;
  std::unique_ptr<Planner> planner_;
  std::unique_ptr<MetaPolicy> meta_;
  ReplayBuffer buffer_;
  MetaBuffer meta_buffer_;
  std::unique_ptr<MetricsSink> sink_;

  // live loop state (all checkpointed)
  std::string run_id_;
  int64_t step_ = 0;
  int64_t episode_ = 0;
  int64_t updates_done_ = 0;
  int episode_steps_ = 0;
  double last_reward_ = 0.0;
  Eigen::VectorXd obs_;
  ModelState wm_state_;
  Plan plan_;
  double ep_return_ = 0.0;
  std::vector<double> ep_replan_probs_;
  std::vector<int> ep_commit_lengths_;
  int steps_since_replan_ = 0;
};

RunResult run_train(const Config& cfg, const std::string& out_root);
RunResult run_ablation(const Config& cfg, AblationMode mode,
                       const std::string& out_root);

// Planning-call latency over a horizon x choices grid on a fresh model. The
// batched lane workspace is sized to the largest choice count so every cell
// shares one capacity.
struct BenchResult {
  std::vector<int> horizons;
  std::vector<int> choices;
  Mat mean_seconds;  // |horizons| x |choices|
  Mat std_seconds;
  int repeats = 0;
  std::string table() const;
  std::string csv() const;
};
BenchResult run_bench(const Config& cfg, const std::vector<int>& horizons,
                      const std::vector<int>& choices, int repeats);

}  // namespace entroplan
