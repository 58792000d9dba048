#pragma once

#include <vector>

#include "entroplan/checkpoint.hpp"
#include "entroplan/rng.hpp"
#include "entroplan/worldmodel.hpp"

namespace entroplan {

// Episode ring buffer over (obs, action, reward, continue) steps, with
// capacity counted in steps and FIFO eviction of whole episodes. The
// collection policy writes here; only the world model reads (the actor and
// critic train exclusively on imagined trajectories).
class ReplayBuffer {
 public:
  ReplayBuffer(int64_t capacity_steps, int obs_dim, int action_dim);

  void begin_episode();
  // action: index taken after obs; reward arrived together with obs.
  void add(const Eigen::VectorXd& obs, int action, double reward, bool cont);
  void end_episode();

  int64_t steps() const { return total_steps_; }
  int64_t episodes() const { return static_cast<int64_t>(episodes_.size()); }
  bool can_sample(int batch_length) const;

  // Samples batch_size sequences of exactly batch_length steps. Sequences
  // never cross an episode boundary; episodes shorter than batch_length are
  // padded past their end with zeroed, done-flagged steps (mask 0).
  SequenceBatch sample(int batch_size, int batch_length, Rng& rng) const;

  void save(BlobWriter& w) const;
  void load(BlobReader& r);

 private:
  struct Step {
    Eigen::VectorXf obs;
    uint8_t action = 0;
    float reward = 0.0f;
    uint8_t cont = 1;
  };
  struct Episode {
    std::vector<Step> steps;
    bool open = true;
  };

  void evict_if_needed();

  int64_t capacity_;
  int obs_dim_;
  int action_dim_;
  int64_t total_steps_ = 0;
  std::vector<Episode> episodes_;
};

}  // namespace entroplan
