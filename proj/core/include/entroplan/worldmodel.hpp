#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "entroplan/distmath.hpp"
#include "entroplan/nn.hpp"

namespace entroplan {

struct RssmConfig {
  int obs_dim = 0;
  int action_dim = 0;
  int deter = 128;   // recurrent state width
  int hidden = 128;  // gate / head hidden width
  int units = 128;   // encoder embedding and head width
  int groups = 8;    // latent groups
  int classes = 8;   // classes per group
  double unimix = 0.01;
  double dyn_scale = 0.5;
  double rep_scale = 0.1;
  double kl_free = 1.0;
  double lr = 1e-4;
  double adam_eps = 1e-8;
  double grad_clip = 1000.0;

  int latent_dim() const { return groups * classes; }
  int feature_dim() const { return deter + groups * classes; }
};

// Batched model state: columns are lanes. z holds stacked one-hot groups.
struct ModelState {
  Mat h;  // deter x B
  Mat z;  // (groups * classes) x B
  int batch() const { return static_cast<int>(h.cols()); }
};

struct PriorPosteriorPair {
  GroupedCategorical prior;
  GroupedCategorical posterior;
};

// Single-lane head readout.
struct HeadOutputs {
  double reward_pred = 0.0;
  double continue_pred = 0.0;
  Eigen::VectorXd obs_recon;
};

struct LossReport {
  std::map<std::string, double> terms;
  double total = 0.0;
};

// One sampled training batch: T steps by B lanes. prev_actions[t] is the
// action taken before obs[t] was received (zeros at an episode start);
// rewards[t] arrived together with obs[t]. mask is 0 on padding steps.
struct SequenceBatch {
  std::vector<Mat> obs;           // T of obs_dim x B
  std::vector<Mat> prev_actions;  // T of action_dim x B (one-hot or zero)
  Mat rewards;                    // T x B
  Mat continues;                  // T x B
  Mat mask;                       // T x B
  int steps() const { return static_cast<int>(obs.size()); }
  int lanes() const { return static_cast<int>(rewards.cols()); }
};

// Grouped-categorical recurrent state-space model. Inference entry points
// (init/observe/imagine/predict) are read-only on parameters and may run
// concurrently; train_step requires exclusive access and must never overlap
// them.
class WorldModel {
 public:
  WorldModel(RssmConfig cfg, Rng& init_rng);

  const RssmConfig& config() const { return cfg_; }

  // Learned initial state broadcast to `batch` lanes; z drawn from the prior
  // at the learned recurrent state.
  ModelState init_state(int batch, Rng& latent) const;

  struct Step {
    ModelState next;
    Mat prior_probs;  // (G*K) x B, unimix-blended
    Mat post_probs;
  };
  Step observe_step(const ModelState& state, const Mat& action_onehot,
                    const Mat& obs, Rng& latent) const;

  struct Imag {
    ModelState next;
    Mat prior_probs;
  };
  Imag imagine_step(const ModelState& state, const Mat& action_onehot,
                    Rng& latent) const;

  struct Heads {
    Mat reward;  // 1 x B
    Mat cont;    // 1 x B, in (0, 1)
    Mat recon;   // obs_dim x B
  };
  Heads predict_heads(const ModelState& state) const;
  HeadOutputs predict_heads_lane(const ModelState& state, int lane) const;

  struct ScalarHeads {
    Mat reward;  // 1 x B
    Mat cont;    // 1 x B
  };
  // Reward and continue only; the imagination hot loop skips the decoder.
  ScalarHeads predict_scalar_heads(const ModelState& state) const;

  Mat embed(const Mat& obs) const;
  Mat feature(const ModelState& state) const;  // [h; z]

  // Extracts one lane of a Step as validated distributions.
  PriorPosteriorPair lane_pair(const Step& step, int lane) const;
  GroupedCategorical lane_dist(const Mat& probs, int lane) const;

  // Computes the full training loss and, when `accumulate_grads`, leaves the
  // gradients on the parameters. With `soft_latents` the sampled one-hot
  // latents are replaced by their probabilities, making the loss a smooth
  // deterministic function of the parameters (used by gradient checks).
  // When `posteriors_out` is given it receives the posterior states of every
  // unmasked batch step (imagination starting points).
  LossReport evaluate_loss(const SequenceBatch& batch, Rng* latent,
                           bool soft_latents, bool accumulate_grads,
                           ModelState* posteriors_out = nullptr);

  // One optimizer update. Throws NonFiniteLoss (naming the offending term)
  // before any parameter is touched if the loss is not finite.
  LossReport train_step(const SequenceBatch& batch, Rng& latent,
                        ModelState* posteriors_out = nullptr);

  std::vector<Param*> params();
  Adam& optimizer() { return opt_; }

  // Blends a uniform floor into grouped softmax probabilities.
  Mat blend_unimix(const Mat& probs) const;
  // Draws stacked one-hot groups, one categorical per (lane, group).
  Mat sample_groups(const Mat& probs, Rng& latent) const;

 private:
  Mat recurrent(const Mat& z, const Mat& action, const Mat& h) const;

  RssmConfig cfg_;
  Mlp encoder_;
  DenseBlock seq_in_;
  GruCell gru_;
  Mlp prior_head_;
  Mlp post_head_;
  Mlp decoder_;
  Mlp reward_head_;
  Mlp cont_head_;
  Param h0_;
  Adam opt_;
};

}  // namespace entroplan
