#pragma once

#include <memory>

#include "entroplan/environment.hpp"

namespace entroplan {

enum class DiagnosticKind { kNoisyTv, kRareTransition };

// Corridor of `length` cells with two actions (left, right). One cell shows a
// uniformly random symbol on every visit: irreducible aleatoric entropy that
// an uncertainty-seeking agent can fixate on. Observation = position one-hot
// followed by symbol one-hot. Rewards are zero.
class NoisyTvEnv : public Environment {
 public:
  explicit NoisyTvEnv(uint64_t seed, int length = 8, int symbols = 8,
                      int limit = 64);

  int obs_dim() const override { return length_ + symbols_; }
  int action_count() const override { return 2; }
  int time_limit() const override { return limit_; }

  Eigen::VectorXd reset(Rng& env_rng) override;
  StepOut step(int action, Rng& env_rng) override;

  int tv_cell() const { return tv_cell_; }
  int position() const { return pos_; }
  int last_symbol() const { return symbol_; }

  void save(BlobWriter& w) const override;
  void load(BlobReader& r) override;

 private:
  Eigen::VectorXd observation() const;
  int length_, symbols_, limit_;
  int tv_cell_;
  int pos_ = 0;
  int symbol_ = -1;  // -1 when off the TV cell
  int steps_ = 0;
};

// Chain of `length` visible states with two actions. `advance` walks right
// and pays a small reward (plus a bonus for holding the final state); the
// `branch` action in one specific state deterministically enters a hidden
// zero-reward branch that a reward-greedy policy never takes.
class RareTransitionEnv : public Environment {
 public:
  explicit RareTransitionEnv(uint64_t seed, int length = 8, int limit = 32);

  static constexpr int kAdvance = 0;
  static constexpr int kBranch = 1;

  int obs_dim() const override { return length_ + kHiddenStates; }
  int action_count() const override { return 2; }
  int time_limit() const override { return limit_; }

  Eigen::VectorXd reset(Rng& env_rng) override;
  StepOut step(int action, Rng& env_rng) override;

  int branch_state() const { return branch_state_; }
  bool in_hidden_branch() const { return hidden_pos_ >= 0; }

  void save(BlobWriter& w) const override;
  void load(BlobReader& r) override;

  static constexpr int kHiddenStates = 4;

 private:
  Eigen::VectorXd observation() const;
  int length_, limit_;
  int branch_state_;
  int pos_ = 0;
  int hidden_pos_ = -1;
  int steps_ = 0;
};

std::unique_ptr<Environment> make_diagnostic_env(DiagnosticKind kind,
                                                 uint64_t seed);

}  // namespace entroplan
