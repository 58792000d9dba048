#include "entroplan/diagnostics.hpp"

#include "entroplan/errors.hpp"

namespace entroplan {

NoisyTvEnv::NoisyTvEnv(uint64_t seed, int length, int symbols, int limit)
    : length_(length), symbols_(symbols), limit_(limit) {
  Rng layout(splitmix64(seed ^ 0x7476u));
  tv_cell_ = 1 + layout.uniform_int(length_ - 1);  // never the start cell
}

Eigen::VectorXd NoisyTvEnv::observation() const {
  Eigen::VectorXd obs = Eigen::VectorXd::Zero(obs_dim());
  obs[pos_] = 1.0;
  if (symbol_ >= 0) obs[length_ + symbol_] = 1.0;
  return obs;
}

Eigen::VectorXd NoisyTvEnv::reset(Rng& env_rng) {
  pos_ = 0;
  steps_ = 0;
  symbol_ = pos_ == tv_cell_ ? env_rng.uniform_int(symbols_) : -1;
  return observation();
}

Environment::StepOut NoisyTvEnv::step(int action, Rng& env_rng) {
  if (action < 0 || action >= 2)
    throw InvalidAction("noisy_tv action must be 0 or 1");
  pos_ += action == 0 ? -1 : 1;
  pos_ = std::max(0, std::min(length_ - 1, pos_));
  ++steps_;
  symbol_ = pos_ == tv_cell_ ? env_rng.uniform_int(symbols_) : -1;
  StepOut out;
  out.obs = observation();
  out.reward.base = 0.0;
  out.reward.total = 0.0;
  out.done = steps_ >= limit_;
  return out;
}

void NoisyTvEnv::save(BlobWriter& w) const {
  w.i64(pos_);
  w.i64(symbol_);
  w.i64(steps_);
  w.i64(tv_cell_);
}

void NoisyTvEnv::load(BlobReader& r) {
  pos_ = static_cast<int>(r.i64());
  symbol_ = static_cast<int>(r.i64());
  steps_ = static_cast<int>(r.i64());
  tv_cell_ = static_cast<int>(r.i64());
}

RareTransitionEnv::RareTransitionEnv(uint64_t seed, int length, int limit)
    : length_(length), limit_(limit) {
  Rng layout(splitmix64(seed ^ 0x7262u));
  branch_state_ = 1 + layout.uniform_int(length_ - 2);
}

Eigen::VectorXd RareTransitionEnv::observation() const {
  Eigen::VectorXd obs = Eigen::VectorXd::Zero(obs_dim());
  if (hidden_pos_ >= 0) obs[length_ + hidden_pos_] = 1.0;
  else obs[pos_] = 1.0;
  return obs;
}

Eigen::VectorXd RareTransitionEnv::reset(Rng&) {
  pos_ = 0;
  hidden_pos_ = -1;
  steps_ = 0;
  return observation();
}

Environment::StepOut RareTransitionEnv::step(int action, Rng&) {
  if (action < 0 || action >= 2)
    throw InvalidAction("rare_transition action must be 0 or 1");
  StepOut out;
  ++steps_;
  if (hidden_pos_ >= 0) {
    // hidden branch: absorbing tail, zero reward
    hidden_pos_ = std::min(hidden_pos_ + 1, kHiddenStates - 1);
  } else if (action == kBranch && pos_ == branch_state_) {
    hidden_pos_ = 0;
  } else if (action == kAdvance) {
    if (pos_ < length_ - 1) {
      ++pos_;
      out.reward.base = 0.05;
    } else {
      out.reward.base = 1.0;  // holding the rewarding terminal cell
    }
  }
  out.reward.total = out.reward.base;
  out.obs = observation();
  out.done = steps_ >= limit_;
  return out;
}

void RareTransitionEnv::save(BlobWriter& w) const {
  w.i64(pos_);
  w.i64(hidden_pos_);
  w.i64(steps_);
  w.i64(branch_state_);
}

void RareTransitionEnv::load(BlobReader& r) {
  pos_ = static_cast<int>(r.i64());
  hidden_pos_ = static_cast<int>(r.i64());
  steps_ = static_cast<int>(r.i64());
  branch_state_ = static_cast<int>(r.i64());
}

std::unique_ptr<Environment> make_diagnostic_env(DiagnosticKind kind,
                                                 uint64_t seed) {
  switch (kind) {
    case DiagnosticKind::kNoisyTv:
      return std::make_unique<NoisyTvEnv>(seed);
    case DiagnosticKind::kRareTransition:
      return std::make_unique<RareTransitionEnv>(seed);
  }
  throw std::invalid_argument("unknown diagnostic kind");
}

}  // namespace entroplan
