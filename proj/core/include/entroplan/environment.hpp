#pragma once

#include <Eigen/Dense>

#include "entroplan/checkpoint.hpp"
#include "entroplan/rng.hpp"

namespace entroplan {

// Per-step reward split. Components are already on the configured reward
// scale; total is always their sum.
struct RewardBreakdown {
  double exploration = 0.0;
  double proximity = 0.0;
  double goal = 0.0;
  double base = 0.0;
  double total = 0.0;
};

// Minimal environment interface. One instance serves one training run;
// instances are independent and may run in parallel across seeds.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual int obs_dim() const = 0;
  virtual int action_count() const = 0;
  virtual int time_limit() const = 0;

  virtual Eigen::VectorXd reset(Rng& env_rng) = 0;

  struct StepOut {
    Eigen::VectorXd obs;
    RewardBreakdown reward;
    bool done = false;
  };
  virtual StepOut step(int action, Rng& env_rng) = 0;

  virtual void save(BlobWriter& w) const = 0;
  virtual void load(BlobReader& r) = 0;
};

}  // namespace entroplan
