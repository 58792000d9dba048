#include "entroplan/replay.hpp"

#include <bit>
#include <stdexcept>

namespace entroplan {

ReplayBuffer::ReplayBuffer(int64_t capacity_steps, int obs_dim,
                           int action_dim)
    : capacity_(capacity_steps), obs_dim_(obs_dim), action_dim_(action_dim) {
  if (capacity_ < 1) throw std::invalid_argument("replay capacity < 1");
}

void ReplayBuffer::begin_episode() {
  if (!episodes_.empty() && episodes_.back().open &&
      episodes_.back().steps.empty()) {
    return;  // an empty open episode is already waiting
  }
  end_episode();
  episodes_.emplace_back();
}

void ReplayBuffer::end_episode() {
  if (!episodes_.empty()) episodes_.back().open = false;
}

void ReplayBuffer::add(const Eigen::VectorXd& obs, int action, double reward,
                       bool cont) {
  if (episodes_.empty() || !episodes_.back().open) begin_episode();
  if (obs.size() != obs_dim_)
    throw std::invalid_argument("replay add: observation size mismatch");
  Step s;
  s.obs = obs.cast<float>();
  s.action = static_cast<uint8_t>(action);
  s.reward = static_cast<float>(reward);
  s.cont = cont ? 1 : 0;
  episodes_.back().steps.push_back(std::move(s));
  ++total_steps_;
  evict_if_needed();
}

void ReplayBuffer::evict_if_needed() {
  size_t drop = 0;
  int64_t steps = total_steps_;
  while (steps > capacity_ && drop + 1 < episodes_.size()) {
    steps -= static_cast<int64_t>(episodes_[drop].steps.size());
    ++drop;
  }
  if (drop > 0) {
    episodes_.erase(episodes_.begin(),
                    episodes_.begin() + static_cast<long>(drop));
    total_steps_ = steps;
  }
}

bool ReplayBuffer::can_sample(int batch_length) const {
  // short episodes sample with padding, so total coverage is what matters
  return total_steps_ >= batch_length;
}

SequenceBatch ReplayBuffer::sample(int batch_size, int batch_length,
                                   Rng& rng) const {
  if (!can_sample(1)) throw std::runtime_error("replay buffer is empty");
  SequenceBatch batch;
  batch.obs.assign(batch_length, Mat::Zero(obs_dim_, batch_size));
  batch.prev_actions.assign(batch_length, Mat::Zero(action_dim_, batch_size));
  batch.rewards = Mat::Zero(batch_length, batch_size);
  batch.continues = Mat::Zero(batch_length, batch_size);
  batch.mask = Mat::Zero(batch_length, batch_size);

  for (int lane = 0; lane < batch_size; ++lane) {
    // draw a uniform step over the whole store, then locate its episode
    int64_t pick = rng.uniform_int(static_cast<int>(
        std::min<int64_t>(total_steps_, INT32_MAX)));
    size_t ep_idx = 0;
    for (; ep_idx < episodes_.size(); ++ep_idx) {
      const int64_t len =
          static_cast<int64_t>(episodes_[ep_idx].steps.size());
      if (pick < len) break;
      pick -= len;
    }
    if (ep_idx >= episodes_.size()) ep_idx = episodes_.size() - 1;
    const auto& ep = episodes_[ep_idx].steps;
    const int ep_len = static_cast<int>(ep.size());
    int start = static_cast<int>(pick);
    if (ep_len > batch_length)
      start = std::min(start, ep_len - batch_length);
    else
      start = 0;

    for (int t = 0; t < batch_length; ++t) {
      const int idx = start + t;
      if (idx >= ep_len) break;  // padding stays zeroed with done flags
      const Step& s = ep[idx];
      batch.obs[t].col(lane) = s.obs.cast<double>();
      if (idx > 0)
        batch.prev_actions[t](ep[idx - 1].action, lane) = 1.0;
      batch.rewards(t, lane) = s.reward;
      batch.continues(t, lane) = s.cont;
      batch.mask(t, lane) = 1.0;
    }
  }
  return batch;
}

void ReplayBuffer::save(BlobWriter& w) const {
  w.i64(capacity_);
  w.i64(obs_dim_);
  w.i64(action_dim_);
  w.i64(total_steps_);
  w.u64(episodes_.size());
  for (const auto& ep : episodes_) {
    w.boolean(ep.open);
    w.u64(ep.steps.size());
    for (const auto& s : ep.steps) {
      w.u64(static_cast<uint64_t>(s.obs.size()));
      for (Eigen::Index i = 0; i < s.obs.size(); ++i)
        w.u32(std::bit_cast<uint32_t>(s.obs[i]));
      w.u8(s.action);
      w.u32(std::bit_cast<uint32_t>(s.reward));
      w.u8(s.cont);
    }
  }
}

void ReplayBuffer::load(BlobReader& r) {
  capacity_ = r.i64();
  obs_dim_ = static_cast<int>(r.i64());
  action_dim_ = static_cast<int>(r.i64());
  total_steps_ = r.i64();
  episodes_.resize(r.u64());
  for (auto& ep : episodes_) {
    ep.open = r.boolean();
    ep.steps.resize(r.u64());
    for (auto& s : ep.steps) {
      s.obs.resize(static_cast<Eigen::Index>(r.u64()));
      for (Eigen::Index i = 0; i < s.obs.size(); ++i)
        s.obs[i] = std::bit_cast<float>(r.u32());
      s.action = r.u8();
      s.reward = std::bit_cast<float>(r.u32());
      s.cont = r.u8();
    }
  }
}

}  // namespace entroplan
