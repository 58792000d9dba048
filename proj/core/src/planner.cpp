#include "entroplan/planner.hpp"

#include <chrono>

#include "entroplan/distmath.hpp"
#include "entroplan/errors.hpp"

namespace entroplan {

std::optional<int> advance_plan(Plan& plan) {
  if (!plan.active || plan.cursor >= plan.length()) {
    plan.active = false;
    return std::nullopt;
  }
  const int action = plan.actions[plan.cursor];
  ++plan.cursor;
  if (plan.cursor >= plan.length()) plan.active = false;
  return action;
}

double score_trajectory(double cum_reward, double cum_entropy,
                        double rew_multiplier, double ent_multiplier) {
  return rew_multiplier * cum_reward + ent_multiplier * cum_entropy;
}

Plan select_plan(const std::vector<ScoredTrajectory>& candidates) {
  if (candidates.empty())
    throw EmptyCandidates("select_plan: no candidates");
  size_t best = 0;
  for (size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].score > candidates[best].score) best = i;
  }
  Plan plan;
  plan.actions = candidates[best].actions;
  plan.cursor = 0;
  plan.final_feature = candidates[best].final_feature;
  plan.active = !plan.actions.empty();
  return plan;
}

std::vector<ScoredTrajectory> Planner::generate_candidates(
    const WorldModel& wm, const ActorCritic& actor, const ModelState& start,
    int n, int horizon, Rng& imag) const {
  if (n < 1) throw std::invalid_argument("generate_candidates: n < 1");
  if (horizon < 1)
    throw std::invalid_argument("generate_candidates: horizon < 1");
  if (start.batch() != 1)
    throw ShapeMismatch("generate_candidates: start state must be one lane");
  const int lanes = std::max(n, cfg_.capacity);

  const auto t0 = std::chrono::steady_clock::now();

  // tile the start state across the padded lane workspace
  ModelState tiled;
  tiled.h = start.h.col(0).replicate(1, lanes);
  tiled.z = start.z.col(0).replicate(1, lanes);

  ImaginedTrajectory traj = actor.imagine_rollout(wm, std::move(tiled),
                                                  horizon, imag);

  std::vector<ScoredTrajectory> out(static_cast<size_t>(n));
  Mat final_feat = wm.feature(traj.states.back());
  const double denom = cfg_.mean_aggregate ? static_cast<double>(horizon)
                                           : 1.0;
  for (int lane = 0; lane < n; ++lane) {
    ScoredTrajectory& cand = out[lane];
    cand.actions.resize(horizon);
    for (int step = 0; step < horizon; ++step) {
      Eigen::Index idx = 0;
      traj.actions[step].col(lane).maxCoeff(&idx);
      cand.actions[step] = static_cast<int>(idx);
    }
    cand.cum_reward = traj.rewards.col(lane).sum() / denom;
    cand.cum_entropy = traj.prior_entropies.col(lane).sum() / denom;
    cand.score = score_trajectory(cand.cum_reward, cand.cum_entropy,
                                  cfg_.rew_multiplier, cfg_.ent_multiplier);
    cand.final_feature = final_feat.col(lane);
  }

  last_seconds_ = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
  return out;
}

Plan Planner::plan(const WorldModel& wm, const ActorCritic& actor,
                   const ModelState& start, Rng& imag) const {
  return select_plan(
      generate_candidates(wm, actor, start, cfg_.choices, cfg_.horizon, imag));
}

}  // namespace entroplan
