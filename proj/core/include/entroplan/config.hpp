#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "entroplan/errors.hpp"

namespace entroplan {

// Flat run configuration. Key names follow the reference hyperparameter
// schema; a handful of keys are accepted for compatibility but have no
// effect here (framework artifacts like device or precision). Unknown keys
// are rejected with the offending name.
//
// File format: UTF-8 text, one `key: value` per line, `#` comments. A key
// with an empty value opens a section; indented lines under it are stored
// namespaced and inert.
struct Config {
  // run
  bool use_plan = true;
  uint64_t seed = 0;
  int64_t steps = 50000;
  int64_t prefill = 1000;
  int64_t checkpoint_every = 0;  // 0 disables periodic checkpoints

  // environment
  std::string task = "maze";  // maze | noisy_tv | rare_transition
  int time_limit = 512;
  int maze_width = 8;
  int maze_height = 8;
  double porosity = 0.2;
  int blur = 1;
  double prox_radius = 10.0;
  double prox_mul = 0.03;
  int goal_count = 3;
  double reward_scale = 0.1;

  // world model
  int dyn_deter = 128;
  int dyn_hidden = 128;
  int dyn_stoch = 8;     // latent groups
  int dyn_discrete = 8;  // classes per group
  int units = 128;
  double unimix_ratio = 0.01;
  double dyn_scale = 0.5;
  double rep_scale = 0.1;
  double kl_free = 1.0;
  std::string initial = "learned";
  double model_lr = 1e-4;
  double opt_eps = 1e-8;
  double grad_clip = 1000.0;

  // replay and cadence
  int batch_size = 16;
  int batch_length = 64;
  int64_t train_ratio = 64;  // replayed steps per environment step
  int64_t dataset_size = 200000;

  // actor-critic
  double discount = 0.997;
  double discount_lambda = 0.95;
  int imag_horizon = 15;
  int imag_starts = 64;  // imagination lanes per update; 0 = every batch state
  double actor_lr = 3e-5;
  double critic_lr = 3e-5;
  double actor_eps = 1e-5;
  double actor_grad_clip = 100.0;
  double actor_entropy = 3e-4;
  double slow_target_fraction = 0.02;
  bool reward_EMA = true;
  double expl_epsilon = 0.05;

  // planner
  int plan_max_horizon = 16;
  int plan_choices = 256;
  std::string plan_aggregate = "sum";  // sum | mean over the horizon
  double ent_multiplier = 1.0;
  double rew_multiplier = 1.0;

  // meta planner (PPO)
  int plan_train_every = 32;
  int sub_batch_size = 64;
  int num_epochs = 30;
  int64_t buffer_size = 32768;
  double clip_epsilon = 0.2;
  double gamma = 0.99;
  double lmbda = 0.95;
  double entropy_eps = 0.1;
  int num_cells = 256;
  double lr = 0.003;
  int seq_length = 8;
  int64_t buffer_minimum = 512;
  int meta_action_quant = 5;

  // keys accepted for schema compatibility but inert in this build
  std::map<std::string, std::string> inert;

  static Config defaults() { return Config{}; }
  static Config load_file(const std::string& path);
  static Config from_text(const std::string& text);

  // Applies one `key: value` assignment; ConfigError on unknown keys or
  // unparsable values.
  void set(const std::string& key, const std::string& value);
  // Parses `key=value` command-line override syntax.
  void apply_override(const std::string& assignment);

  void validate() const;

  // Canonical text form of every effective key; stable across runs.
  std::string to_text() const;
  uint64_t hash() const;
  // Deterministic identifier for a run with this config and seed.
  std::string run_id() const;
};

}  // namespace entroplan
