#include "entroplan/trainloop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "entroplan/diagnostics.hpp"
#include "entroplan/distmath.hpp"
#include "entroplan/maze.hpp"

namespace entroplan {

AblationMode ablation_mode_from_string(const std::string& name) {
  if (name == "mpc") return AblationMode::kMpc;
  if (name == "entropy_only") return AblationMode::kEntropyOnly;
  if (name == "reward_only") return AblationMode::kRewardOnly;
  if (name == "mixed") return AblationMode::kMixed;
  throw ConfigError("unknown ablation mode: " + name);
}

Config apply_ablation(Config cfg, AblationMode mode) {
  switch (mode) {
    case AblationMode::kNone:
      break;
    case AblationMode::kMpc:
      // replanning every step is slower per step, so the budget shrinks
      cfg.steps = static_cast<int64_t>(std::llround(cfg.steps * 0.9));
      break;
    case AblationMode::kEntropyOnly:
      cfg.rew_multiplier = 0.0;
      cfg.ent_multiplier = 1.0;
      break;
    case AblationMode::kRewardOnly:
      cfg.rew_multiplier = 1.0;
      cfg.ent_multiplier = 0.0;
      break;
    case AblationMode::kMixed:
      cfg.rew_multiplier = 0.5;
      cfg.ent_multiplier = 0.5;
      break;
  }
  return cfg;
}

std::unique_ptr<Environment> make_env(const Config& cfg) {
  if (cfg.task == "maze") {
    MazeSpec spec;
    spec.width = cfg.maze_width;
    spec.height = cfg.maze_height;
    spec.porosity = cfg.porosity;
    spec.time_limit = cfg.time_limit;
    spec.blur = cfg.blur;
    spec.prox_radius = cfg.prox_radius;
    spec.prox_mul = cfg.prox_mul;
    spec.goal_count = cfg.goal_count;
    spec.reward_scale = cfg.reward_scale;
    return std::make_unique<MazeEnv>(spec);
  }
  if (cfg.task == "noisy_tv")
    return std::make_unique<NoisyTvEnv>(cfg.seed);
  if (cfg.task == "rare_transition")
    return std::make_unique<RareTransitionEnv>(cfg.seed);
  throw ConfigError("unsupported task: " + cfg.task);
}

TrainRun::TrainRun(Config cfg, std::string run_dir, AblationMode mode)
    : cfg_(std::move(cfg)),
      mode_(mode),
      run_dir_(std::move(run_dir)),
      rngs_(cfg_.seed),
      env_(make_env(cfg_)),
      buffer_(cfg_.dataset_size, 0, 0),
      meta_buffer_(static_cast<size_t>(cfg_.buffer_size)) {
  cfg_.validate();

  RssmConfig rssm;
  rssm.obs_dim = env_->obs_dim();
  rssm.action_dim = env_->action_count();
  rssm.deter = cfg_.dyn_deter;
  rssm.hidden = cfg_.dyn_hidden;
  rssm.units = cfg_.units;
  rssm.groups = cfg_.dyn_stoch;
  rssm.classes = cfg_.dyn_discrete;
  rssm.unimix = cfg_.unimix_ratio;
  rssm.dyn_scale = cfg_.dyn_scale;
  rssm.rep_scale = cfg_.rep_scale;
  rssm.kl_free = cfg_.kl_free;
  rssm.lr = cfg_.model_lr;
  rssm.adam_eps = cfg_.opt_eps;
  rssm.grad_clip = cfg_.grad_clip;
  wm_ = std::make_unique<WorldModel>(rssm, rngs_.model_init());

  AgentConfig agent;
  agent.action_dim = env_->action_count();
  agent.feature_dim = rssm.feature_dim();
  agent.units = cfg_.units;
  agent.actor_lr = cfg_.actor_lr;
  agent.critic_lr = cfg_.critic_lr;
  agent.adam_eps = cfg_.actor_eps;
  agent.grad_clip = cfg_.actor_grad_clip;
  agent.entropy_coef = cfg_.actor_entropy;
  agent.unimix = cfg_.unimix_ratio;
  agent.slow_fraction = cfg_.slow_target_fraction;
  agent.discount = cfg_.discount;
  agent.lambda_ = cfg_.discount_lambda;
  agent.return_norm = cfg_.reward_EMA;
  ac_ = std::make_unique<ActorCritic>(agent, rngs_.model_init());

  if (cfg_.use_plan) {
    PlannerConfig pcfg;
    pcfg.choices = cfg_.plan_choices;
    pcfg.horizon = cfg_.plan_max_horizon;
    pcfg.rew_multiplier = cfg_.rew_multiplier;
    pcfg.ent_multiplier = cfg_.ent_multiplier;
    pcfg.mean_aggregate = cfg_.plan_aggregate == "mean";
    planner_ = std::make_unique<Planner>(pcfg);
    if (mode_ != AblationMode::kMpc) {
      MetaConfig meta;
      meta.obs_dim = MetaObservation::dim(cfg_.units, rssm.feature_dim(),
                                          env_->action_count());
      meta.num_cells = cfg_.num_cells;
      meta.action_quant = cfg_.meta_action_quant;
      meta.lr = cfg_.lr;
      meta.clip_epsilon = cfg_.clip_epsilon;
      meta.gamma = cfg_.gamma;
      meta.lambda_ = cfg_.lmbda;
      meta.entropy_coef = cfg_.entropy_eps;
      meta.num_epochs = cfg_.num_epochs;
      meta.sub_batch_size = cfg_.sub_batch_size;
      meta.seq_length = cfg_.seq_length;
      meta.rew_multiplier = cfg_.rew_multiplier;
      meta.ent_multiplier = cfg_.ent_multiplier;
      meta_ = std::make_unique<MetaPolicy>(meta, rngs_.model_init());
    }
  }

  buffer_ = ReplayBuffer(cfg_.dataset_size, env_->obs_dim(),
                         env_->action_count());
  sink_ = std::make_unique<MetricsSink>(run_dir_);
  run_id_ = cfg_.run_id();
  reset_episode();
}

Mat TrainRun::action_onehot(int action) const {
  Mat a = Mat::Zero(env_->action_count(), 1);
  a(action, 0) = 1.0;
  return a;
}

void TrainRun::reset_episode() {
  obs_ = env_->reset(rngs_.env());
  wm_state_ = wm_->init_state(1, rngs_.latent());
  auto step = wm_->observe_step(wm_state_, Mat::Zero(env_->action_count(), 1),
                                obs_, rngs_.latent());
  wm_state_ = std::move(step.next);
  plan_ = Plan{};
  episode_steps_ = 0;
  ep_return_ = 0.0;
  ep_replan_probs_.clear();
  ep_commit_lengths_.clear();
  steps_since_replan_ = 0;
  buffer_.begin_episode();
}

Eigen::VectorXd TrainRun::build_meta_obs() const {
  MetaObservation mo;
  mo.encoder_embedding = wm_->embed(obs_).col(0);
  mo.rssm_feature = wm_->feature(wm_state_).col(0);
  mo.step_normalized =
      static_cast<double>(episode_steps_) / env_->time_limit();
  Eigen::VectorXd greedy = Eigen::VectorXd::Zero(env_->action_count());
  // greedy mode consumes no randomness
  Rng dummy(0);
  greedy[ac_->act(*wm_, wm_state_, ActMode::kGreedy, dummy)] = 1.0;
  mo.greedy_action = greedy;
  mo.plan_position_normalized = plan_.active ? plan_.position() : 0.0;
  mo.in_plan = plan_.active ? 1.0 : 0.0;
  mo.final_feature = plan_.active
                         ? plan_.final_feature
                         : Eigen::VectorXd::Zero(wm_->config().feature_dim());
  return mo.concat();
}

void TrainRun::one_step() {
  int action = 0;
  bool planned_step = false;
  MetaTransition pending;

  if (cfg_.use_plan) {
    planned_step = true;
    Eigen::VectorXd meta_obs = build_meta_obs();
    MetaPolicy::Decision decision;
    if (mode_ == AblationMode::kMpc) {
      decision.p_index = cfg_.meta_action_quant - 1;
      decision.p = 1.0;
      decision.log_prob = 0.0;
      decision.replan = true;
    } else {
      decision = meta_->decide_replan(meta_obs, rngs_.meta());
    }
    const bool forced = !plan_.active;  // exhausted plans force a replan
    const bool replan = decision.replan || forced;
    if (replan) {
      if (steps_since_replan_ > 0)
        ep_commit_lengths_.push_back(steps_since_replan_);
      steps_since_replan_ = 0;
      plan_ = planner_->plan(*wm_, *ac_, wm_state_, rngs_.imagination());
      PlanCallRecord rec;
      rec.step = step_;
      rec.seed = cfg_.seed;
      rec.run_id = run_id_;
      rec.seconds = planner_->last_call_seconds();
      rec.horizon = cfg_.plan_max_horizon;
      rec.choices = cfg_.plan_choices;
      sink_->write(rec);
    }
    auto next_action = advance_plan(plan_);
    action = next_action.value_or(0);
    ep_replan_probs_.push_back(decision.p * decision.p);
    pending.obs = std::move(meta_obs);
    pending.action = decision.p_index;
    pending.log_prob = decision.log_prob;
    pending.implemented = replan;
  } else {
    action = ac_->act(*wm_, wm_state_, ActMode::kSample, rngs_.collection(),
                      cfg_.expl_epsilon);
  }

  // record the step the action closes out, then act
  const double held_reward = episode_steps_ == 0 ? 0.0 : last_reward_;
  buffer_.add(obs_, action, held_reward, true);

  auto out = env_->step(action, rngs_.env());
  auto ostep =
      wm_->observe_step(wm_state_, action_onehot(action), out.obs, rngs_.latent());
  const double prior_entropy = entropy_cols(ostep.prior_probs)[0];
  wm_state_ = std::move(ostep.next);
  obs_ = out.obs;
  last_reward_ = out.reward.total;

  if (planned_step) {
    ++steps_since_replan_;
    if (mode_ != AblationMode::kMpc) {
      pending.step_entropy = prior_entropy;
      pending.next_base_reward = out.reward.total;
      pending.done = out.done;
      meta_buffer_.push(std::move(pending));
    }
  }

  ep_return_ += out.reward.total;
  ++episode_steps_;
  ++step_;

  if (out.done) {
    // terminal observation enters the buffer with its reward and cont = 0
    buffer_.add(obs_, 0, last_reward_, false);
    buffer_.end_episode();
    bool by_goals = false;
    if (const auto* maze = dynamic_cast<const MazeEnv*>(env_.get())) {
      by_goals = true;
      for (const auto& g : maze->state().goals) by_goals = by_goals && g.found;
    }
    flush_episode_record(by_goals);
    ++episode_;
    reset_episode();
  }

  training_updates();

  if (cfg_.use_plan && mode_ != AblationMode::kMpc &&
      step_ % cfg_.plan_train_every == 0) {
    auto report = meta_->ppo_update(meta_buffer_,
                                    static_cast<size_t>(cfg_.buffer_minimum));
    if (report) {
      UpdateRecord rec;
      rec.step = step_;
      rec.seed = cfg_.seed;
      rec.run_id = run_id_;
      rec.kind = "meta";
      rec.terms = report->terms;
      sink_->write(rec);
    }
  }

  if (cfg_.checkpoint_every > 0 && step_ % cfg_.checkpoint_every == 0) {
    save_checkpoint(run_dir_ + "/checkpoint.bin");
  }
}

void TrainRun::training_updates() {
  if (step_ < cfg_.prefill) return;
  const int64_t chunk =
      static_cast<int64_t>(cfg_.batch_size) * cfg_.batch_length;
  const int64_t target = (step_ - cfg_.prefill) * cfg_.train_ratio / chunk;
  while (updates_done_ < target && buffer_.can_sample(cfg_.batch_length)) {
    SequenceBatch batch =
        buffer_.sample(cfg_.batch_size, cfg_.batch_length, rngs_.latent());
    ModelState posteriors;
    LossReport wm_report = wm_->train_step(batch, rngs_.latent(), &posteriors);

    // imagination starts from the batch posterior states
    const int total = posteriors.batch();
    ModelState starts = posteriors;
    if (cfg_.imag_starts > 0 && cfg_.imag_starts < total) {
      starts.h.resize(posteriors.h.rows(), cfg_.imag_starts);
      starts.z.resize(posteriors.z.rows(), cfg_.imag_starts);
      for (int i = 0; i < cfg_.imag_starts; ++i) {
        const int pick = rngs_.imagination().uniform_int(total);
        starts.h.col(i) = posteriors.h.col(pick);
        starts.z.col(i) = posteriors.z.col(pick);
      }
    }
    ImaginedTrajectory traj = ac_->imagine_rollout(
        *wm_, std::move(starts), cfg_.imag_horizon, rngs_.imagination());
    LossReport ac_report = ac_->update(*wm_, traj);

    ++updates_done_;
    UpdateRecord rec;
    rec.step = step_;
    rec.seed = cfg_.seed;
    rec.run_id = run_id_;
    rec.kind = "world_model";
    rec.terms = wm_report.terms;
    sink_->write(rec);
    rec.kind = "actor_critic";
    rec.terms = ac_report.terms;
    sink_->write(rec);
  }
}

void TrainRun::flush_episode_record(bool done_by_goals) {
  if (steps_since_replan_ > 0) {
    ep_commit_lengths_.push_back(steps_since_replan_);
    steps_since_replan_ = 0;
  }
  EpisodeRecord rec;
  rec.step = step_;
  rec.seed = cfg_.seed;
  rec.run_id = run_id_;
  rec.episode = episode_;
  rec.episode_return = ep_return_;
  rec.length = episode_steps_;
  int goals = 0;
  if (const auto* maze = dynamic_cast<const MazeEnv*>(env_.get())) {
    for (const auto& g : maze->state().goals) goals += g.found ? 1 : 0;
  } else if (done_by_goals) {
    goals = 3;
  }
  rec.goals_found = goals;

  const auto moments = [](const std::vector<double>& xs, double& mean,
                          double& stddev, double& mx) {
    mean = stddev = mx = 0.0;
    if (xs.empty()) return;
    mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    double sq = 0.0;
    for (double x : xs) {
      sq += (x - mean) * (x - mean);
      mx = std::max(mx, x);
    }
    stddev = std::sqrt(sq / xs.size());
  };
  moments(ep_replan_probs_, rec.mean_replan_prob, rec.std_replan_prob,
          rec.max_replan_prob);
  std::vector<double> lens(ep_commit_lengths_.begin(),
                           ep_commit_lengths_.end());
  moments(lens, rec.mean_len_before_replan, rec.std_len_before_replan,
          rec.max_len_before_replan);
  sink_->write(rec);
}

namespace {

void save_meta_buffer(BlobWriter& w, const MetaBuffer& buffer) {
  w.u64(buffer.size());
  for (size_t i = 0; i < buffer.size(); ++i) {
    const MetaTransition& t = buffer.at(i);
    w.vec(t.obs);
    w.i64(t.action);
    w.f64(t.log_prob);
    w.boolean(t.implemented);
    w.f64(t.step_entropy);
    w.f64(t.next_base_reward);
    w.boolean(t.done);
  }
}

void load_meta_buffer(BlobReader& r, MetaBuffer& buffer) {
  buffer.clear();
  const uint64_t n = r.u64();
  for (uint64_t i = 0; i < n; ++i) {
    MetaTransition t;
    t.obs = r.vec();
    t.action = static_cast<int>(r.i64());
    t.log_prob = r.f64();
    t.implemented = r.boolean();
    t.step_entropy = r.f64();
    t.next_base_reward = r.f64();
    t.done = r.boolean();
    buffer.push(std::move(t));
  }
}

}  // namespace

void TrainRun::save_checkpoint(const std::string& path) {
  BlobWriter w;
  w.str(cfg_.to_text());
  w.i64(step_);
  w.i64(episode_);
  w.i64(updates_done_);
  w.i64(episode_steps_);
  w.f64(last_reward_);
  {
    std::ostringstream rng_state;
    rngs_.save(rng_state);
    w.str(rng_state.str());
  }
  save_params(w, wm_->params());
  w.i64(wm_->optimizer().steps_taken());
  save_params(w, ac_->params());
  w.i64(ac_->actor_optimizer().steps_taken());
  w.i64(ac_->critic_optimizer().steps_taken());
  w.f64(ac_->return_scale_ema());
  w.boolean(meta_ != nullptr);
  if (meta_) {
    save_params(w, meta_->params());
    w.i64(meta_->actor_optimizer().steps_taken());
    w.i64(meta_->critic_optimizer().steps_taken());
  }
  buffer_.save(w);
  save_meta_buffer(w, meta_buffer_);
  env_->save(w);
  w.vec(obs_);
  w.mat(wm_state_.h);
  w.mat(wm_state_.z);
  w.u64(plan_.actions.size());
  for (int a : plan_.actions) w.i64(a);
  w.i64(plan_.cursor);
  w.vec(plan_.final_feature.size() > 0
            ? plan_.final_feature
            : Eigen::VectorXd::Zero(0));
  w.boolean(plan_.active);
  w.f64(ep_return_);
  w.u64(ep_replan_probs_.size());
  for (double p : ep_replan_probs_) w.f64(p);
  w.u64(ep_commit_lengths_.size());
  for (int c : ep_commit_lengths_) w.i64(c);
  w.i64(steps_since_replan_);
  write_checkpoint_file(path, w.payload());
}

void TrainRun::load_checkpoint(const std::string& path) {
  BlobReader r(read_checkpoint_file(path));
  const std::string cfg_text = r.str();
  if (cfg_text != cfg_.to_text())
    throw ConfigError("checkpoint was produced under a different config");
  step_ = r.i64();
  episode_ = r.i64();
  updates_done_ = r.i64();
  episode_steps_ = static_cast<int>(r.i64());
  last_reward_ = r.f64();
  {
    std::istringstream rng_state(r.str());
    rngs_.load(rng_state);
  }
  load_params(r, wm_->params());
  wm_->optimizer().set_steps_taken(r.i64());
  load_params(r, ac_->params());
  ac_->actor_optimizer().set_steps_taken(r.i64());
  ac_->critic_optimizer().set_steps_taken(r.i64());
  ac_->set_return_scale_ema(r.f64());
  const bool has_meta = r.boolean();
  if (has_meta != (meta_ != nullptr))
    throw CorruptBlob("checkpoint meta-policy presence mismatch");
  if (meta_) {
    load_params(r, meta_->params());
    meta_->actor_optimizer().set_steps_taken(r.i64());
    meta_->critic_optimizer().set_steps_taken(r.i64());
  }
  buffer_.load(r);
  load_meta_buffer(r, meta_buffer_);
  env_->load(r);
  obs_ = r.vec();
  wm_state_.h = r.mat();
  wm_state_.z = r.mat();
  plan_.actions.resize(r.u64());
  for (auto& a : plan_.actions) a = static_cast<int>(r.i64());
  plan_.cursor = static_cast<int>(r.i64());
  plan_.final_feature = r.vec();
  plan_.active = r.boolean();
  ep_return_ = r.f64();
  ep_replan_probs_.resize(r.u64());
  for (auto& p : ep_replan_probs_) p = r.f64();
  ep_commit_lengths_.resize(r.u64());
  for (auto& c : ep_commit_lengths_) c = static_cast<int>(r.i64());
  steps_since_replan_ = static_cast<int>(r.i64());
}

RunResult TrainRun::run() { return run_steps(cfg_.steps - step_); }

RunResult TrainRun::run_steps(int64_t max_steps) {
  const int64_t until = std::min<int64_t>(cfg_.steps, step_ + max_steps);
  try {
    while (step_ < until) one_step();
  } catch (const NonFiniteLoss&) {
    // fail fast, but leave the metric stream on disk for diagnosis
    sink_->flush();
    throw;
  }
  sink_->flush();
  RunResult result;
  result.run_dir = run_dir_;
  result.steps_completed = step_;
  result.episodes = episode_;
  return result;
}

RunResult run_train(const Config& cfg, const std::string& out_root) {
  const std::string dir = out_root + "/" + cfg.run_id();
  TrainRun run(cfg, dir);
  return run.run();
}

RunResult run_ablation(const Config& cfg, AblationMode mode,
                       const std::string& out_root) {
  Config adjusted = apply_ablation(cfg, mode);
  std::string suffix;
  switch (mode) {
    case AblationMode::kNone: suffix = "none"; break;
    case AblationMode::kMpc: suffix = "mpc"; break;
    case AblationMode::kEntropyOnly: suffix = "entropy_only"; break;
    case AblationMode::kRewardOnly: suffix = "reward_only"; break;
    case AblationMode::kMixed: suffix = "mixed"; break;
  }
  const std::string dir =
      out_root + "/" + adjusted.run_id() + "-ablate-" + suffix;
  TrainRun run(adjusted, dir, mode);
  return run.run();
}

std::string BenchResult::table() const {
  std::ostringstream out;
  out << "H / N";
  for (int n : choices) out << '\t' << n;
  out << '\n';
  for (size_t hi = 0; hi < horizons.size(); ++hi) {
    out << horizons[hi];
    for (size_t ni = 0; ni < choices.size(); ++ni) {
      char cell[64];
      std::snprintf(cell, sizeof(cell), "\t%.4f±%.4f",
                    mean_seconds(static_cast<Eigen::Index>(hi),
                                 static_cast<Eigen::Index>(ni)),
                    std_seconds(static_cast<Eigen::Index>(hi),
                                static_cast<Eigen::Index>(ni)));
      out << cell;
    }
    out << '\n';
  }
  return out.str();
}

std::string BenchResult::csv() const {
  std::ostringstream out;
  out << "horizon,choices,mean_seconds,std_seconds,repeats\n";
  for (size_t hi = 0; hi < horizons.size(); ++hi)
    for (size_t ni = 0; ni < choices.size(); ++ni)
      out << horizons[hi] << ',' << choices[ni] << ','
          << mean_seconds(static_cast<Eigen::Index>(hi),
                          static_cast<Eigen::Index>(ni))
          << ','
          << std_seconds(static_cast<Eigen::Index>(hi),
                         static_cast<Eigen::Index>(ni))
          << ',' << repeats << '\n';
  return out.str();
}

BenchResult run_bench(const Config& cfg, const std::vector<int>& horizons,
                      const std::vector<int>& choices, int repeats) {
  RngPool rngs(cfg.seed);
  auto env = make_env(cfg);

  RssmConfig rssm;
  rssm.obs_dim = env->obs_dim();
  rssm.action_dim = env->action_count();
  rssm.deter = cfg.dyn_deter;
  rssm.hidden = cfg.dyn_hidden;
  rssm.units = cfg.units;
  rssm.groups = cfg.dyn_stoch;
  rssm.classes = cfg.dyn_discrete;
  rssm.unimix = cfg.unimix_ratio;
  WorldModel wm(rssm, rngs.model_init());

  AgentConfig agent;
  agent.action_dim = env->action_count();
  agent.feature_dim = rssm.feature_dim();
  agent.units = cfg.units;
  agent.unimix = cfg.unimix_ratio;
  ActorCritic ac(agent, rngs.model_init());

  PlannerConfig pcfg;
  pcfg.choices = *std::max_element(choices.begin(), choices.end());
  pcfg.horizon = *std::max_element(horizons.begin(), horizons.end());
  pcfg.capacity = pcfg.choices;
  Planner planner(pcfg);

  Eigen::VectorXd obs = env->reset(rngs.env());
  ModelState state = wm.init_state(1, rngs.latent());
  state = wm.observe_step(state, Mat::Zero(env->action_count(), 1), obs,
                          rngs.latent())
              .next;

  BenchResult result;
  result.horizons = horizons;
  result.choices = choices;
  result.repeats = repeats;
  result.mean_seconds = Mat::Zero(horizons.size(), choices.size());
  result.std_seconds = Mat::Zero(horizons.size(), choices.size());

  for (size_t hi = 0; hi < horizons.size(); ++hi) {
    for (size_t ni = 0; ni < choices.size(); ++ni) {
      // one warmup call outside the measurement
      planner.generate_candidates(wm, ac, state, choices[ni], horizons[hi],
                                  rngs.imagination());
      std::vector<double> samples(repeats);
      for (int r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        planner.generate_candidates(wm, ac, state, choices[ni], horizons[hi],
                                    rngs.imagination());
        samples[r] = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
      }
      const double mean =
          std::accumulate(samples.begin(), samples.end(), 0.0) / repeats;
      double sq = 0.0;
      for (double s : samples) sq += (s - mean) * (s - mean);
      result.mean_seconds(static_cast<Eigen::Index>(hi),
                          static_cast<Eigen::Index>(ni)) = mean;
      result.std_seconds(static_cast<Eigen::Index>(hi),
                         static_cast<Eigen::Index>(ni)) =
          std::sqrt(sq / std::max(1, repeats - 1));
    }
  }
  return result;
}

}  // namespace entroplan
