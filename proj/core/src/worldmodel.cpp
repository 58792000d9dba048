#include "entroplan/worldmodel.hpp"

#include <cmath>

#include "entroplan/errors.hpp"

namespace entroplan {

WorldModel::WorldModel(RssmConfig cfg, Rng& init_rng)
    : cfg_(cfg),
      encoder_("wm.encoder", cfg.obs_dim, {cfg.units}, cfg.units, init_rng),
      seq_in_("wm.seq_in", cfg.latent_dim() + cfg.action_dim, cfg.hidden,
              init_rng),
      gru_("wm.gru", cfg.hidden, cfg.deter, init_rng),
      // prior and posterior heads start with tiny output weights so a fresh
      // model predicts near-uniform latents
      prior_head_("wm.prior", cfg.deter, {cfg.hidden}, cfg.latent_dim(),
                  init_rng, 0.01),
      post_head_("wm.post", cfg.deter + cfg.units, {cfg.hidden},
                 cfg.latent_dim(), init_rng, 0.01),
      decoder_("wm.decoder", cfg.feature_dim(), {cfg.units}, cfg.obs_dim,
               init_rng),
      reward_head_("wm.reward", cfg.feature_dim(), {cfg.units}, 1, init_rng,
                   0.01),
      cont_head_("wm.cont", cfg.feature_dim(), {cfg.units}, 1, init_rng,
                 0.01),
      h0_("wm.h0", Mat::Zero(cfg.deter, 1)),
      opt_(cfg.lr, cfg.adam_eps, cfg.grad_clip) {}

Mat WorldModel::blend_unimix(const Mat& probs) const {
  const double u = cfg_.unimix;
  return (1.0 - u) * probs.array() + u / cfg_.classes;
}

Mat WorldModel::sample_groups(const Mat& probs, Rng& latent) const {
  const int g_count = cfg_.groups, k = cfg_.classes;
  Mat onehot = Mat::Zero(probs.rows(), probs.cols());
  for (Eigen::Index lane = 0; lane < probs.cols(); ++lane) {
    const double* col = probs.col(lane).data();
    for (int g = 0; g < g_count; ++g) {
      const int pick = latent.categorical(col + static_cast<size_t>(g) * k, k);
      onehot(static_cast<Eigen::Index>(g) * k + pick, lane) = 1.0;
    }
  }
  return onehot;
}

Mat WorldModel::recurrent(const Mat& z, const Mat& action,
                          const Mat& h) const {
  Mat za(z.rows() + action.rows(), z.cols());
  za << z, action;
  return gru_.apply(seq_in_.apply(za), h);
}

ModelState WorldModel::init_state(int batch, Rng& latent) const {
  ModelState s;
  s.h = h0_.value.col(0).replicate(1, batch);
  Mat logits = prior_head_.apply(s.h);
  Mat probs(logits.rows(), logits.cols());
  // grouped softmax (inference path)
  for (int g = 0; g < cfg_.groups; ++g) {
    auto block = logits.middleRows(
        static_cast<Eigen::Index>(g) * cfg_.classes, cfg_.classes);
    Eigen::RowVectorXd mx = block.colwise().maxCoeff();
    Mat e = (block.rowwise() - mx).array().exp();
    Eigen::RowVectorXd zsum = e.colwise().sum();
    probs.middleRows(static_cast<Eigen::Index>(g) * cfg_.classes,
                     cfg_.classes) = e.array().rowwise() / zsum.array();
  }
  s.z = sample_groups(blend_unimix(probs), latent);
  return s;
}

namespace {

Mat grouped_softmax_plain(const Mat& logits, int groups, int classes) {
  Mat probs(logits.rows(), logits.cols());
  for (int g = 0; g < groups; ++g) {
    auto block =
        logits.middleRows(static_cast<Eigen::Index>(g) * classes, classes);
    Eigen::RowVectorXd mx = block.colwise().maxCoeff();
    Mat e = (block.rowwise() - mx).array().exp();
    Eigen::RowVectorXd zsum = e.colwise().sum();
    probs.middleRows(static_cast<Eigen::Index>(g) * classes, classes) =
        e.array().rowwise() / zsum.array();
  }
  return probs;
}

}  // namespace

WorldModel::Step WorldModel::observe_step(const ModelState& state,
                                          const Mat& action_onehot,
                                          const Mat& obs, Rng& latent) const {
  if (action_onehot.rows() != cfg_.action_dim ||
      obs.rows() != cfg_.obs_dim || action_onehot.cols() != state.h.cols() ||
      obs.cols() != state.h.cols())
    throw ShapeMismatch("observe_step: input shapes do not match the model");
  Step out;
  Mat h = recurrent(state.z, action_onehot, state.h);
  out.prior_probs = blend_unimix(
      grouped_softmax_plain(prior_head_.apply(h), cfg_.groups, cfg_.classes));
  Mat embedded = encoder_.apply(obs);
  Mat he(h.rows() + embedded.rows(), h.cols());
  he << h, embedded;
  out.post_probs = blend_unimix(grouped_softmax_plain(
      post_head_.apply(he), cfg_.groups, cfg_.classes));
  out.next.h = std::move(h);
  out.next.z = sample_groups(out.post_probs, latent);
  return out;
}

WorldModel::Imag WorldModel::imagine_step(const ModelState& state,
                                          const Mat& action_onehot,
                                          Rng& latent) const {
  Imag out;
  Mat h = recurrent(state.z, action_onehot, state.h);
  out.prior_probs = blend_unimix(
      grouped_softmax_plain(prior_head_.apply(h), cfg_.groups, cfg_.classes));
  out.next.h = std::move(h);
  out.next.z = sample_groups(out.prior_probs, latent);
  return out;
}

WorldModel::Heads WorldModel::predict_heads(const ModelState& state) const {
  Heads out;
  Mat feat = feature(state);
  out.reward = reward_head_.apply(feat);
  Mat logit = cont_head_.apply(feat);
  out.cont = (1.0 / (1.0 + (-logit.array()).exp())).matrix();
  out.recon = decoder_.apply(feat);
  return out;
}

WorldModel::ScalarHeads WorldModel::predict_scalar_heads(
    const ModelState& state) const {
  ScalarHeads out;
  Mat feat = feature(state);
  out.reward = reward_head_.apply(feat);
  Mat logit = cont_head_.apply(feat);
  out.cont = (1.0 / (1.0 + (-logit.array()).exp())).matrix();
  return out;
}

HeadOutputs WorldModel::predict_heads_lane(const ModelState& state,
                                           int lane) const {
  Heads h = predict_heads(state);
  HeadOutputs out;
  out.reward_pred = h.reward(0, lane);
  out.continue_pred = h.cont(0, lane);
  out.obs_recon = h.recon.col(lane);
  return out;
}

Mat WorldModel::embed(const Mat& obs) const { return encoder_.apply(obs); }

Mat WorldModel::feature(const ModelState& state) const {
  Mat feat(state.h.rows() + state.z.rows(), state.h.cols());
  feat << state.h, state.z;
  return feat;
}

PriorPosteriorPair WorldModel::lane_pair(const Step& step, int lane) const {
  return {lane_dist(step.prior_probs, lane), lane_dist(step.post_probs, lane)};
}

GroupedCategorical WorldModel::lane_dist(const Mat& probs, int lane) const {
  return GroupedCategorical::from_flat(probs.col(lane), cfg_.groups,
                                       cfg_.classes);
}

LossReport WorldModel::evaluate_loss(const SequenceBatch& batch, Rng* latent,
                                     bool soft_latents, bool accumulate_grads,
                                     ModelState* posteriors_out) {
  const int steps = batch.steps();
  const int lanes = batch.lanes();
  const int g_count = cfg_.groups, k = cfg_.classes;
  Tape t;
  std::vector<Mat> kept_h, kept_z;

  Var h = t.add_bias(t.constant(Mat::Zero(cfg_.deter, lanes)), t.param(h0_));
  Var prior_logits0 = prior_head_.apply(t, h);
  Var prior_probs0 = t.add_const(
      t.scale(t.group_softmax(prior_logits0, g_count, k), 1.0 - cfg_.unimix),
      cfg_.unimix / k);
  Var z = soft_latents
              ? prior_probs0
              : t.straight_through(prior_probs0,
                                   sample_groups(t.val(prior_probs0), *latent));

  Var recon_sum, reward_sum, cont_sum, dyn_sum, rep_sum;
  bool first = true;
  double kl_raw_sum = 0.0;
  double mask_total = 0.0;

  for (int step = 0; step < steps; ++step) {
    const Mat mask_row = batch.mask.row(step);
    mask_total += mask_row.sum();

    Var za = t.concat_rows({z, t.constant(batch.prev_actions[step])});
    h = gru_.apply(t, seq_in_.apply(t, za), h);

    Var prior_probs = t.add_const(
        t.scale(t.group_softmax(prior_head_.apply(t, h), g_count, k),
                1.0 - cfg_.unimix),
        cfg_.unimix / k);
    Var embedded = encoder_.apply(t, t.constant(batch.obs[step]));
    Var post_probs = t.add_const(
        t.scale(t.group_softmax(post_head_.apply(t, t.concat_rows({h, embedded})),
                                g_count, k),
                1.0 - cfg_.unimix),
        cfg_.unimix / k);

    z = soft_latents
            ? post_probs
            : t.straight_through(post_probs,
                                 sample_groups(t.val(post_probs), *latent));
    if (posteriors_out) {
      kept_h.push_back(t.val(h));
      kept_z.push_back(t.val(z));
    }

    Var feat = t.concat_rows({h, z});
    Var recon = decoder_.apply(t, feat);
    Var reward = reward_head_.apply(t, feat);
    Var cont_logit = cont_head_.apply(t, feat);

    // half squared error summed over dims, per lane
    Var recon_err = t.colwise_sum(
        t.scale(t.square(t.sub(recon, t.constant(batch.obs[step]))), 0.5));
    Var reward_err = t.scale(
        t.square(t.sub(reward, t.constant(batch.rewards.row(step)))), 0.5);
    // binary cross-entropy on the continue logit
    Var cont_err = t.sub(t.softplus(cont_logit),
                         t.mul_elem(cont_logit, batch.continues.row(step)));

    // balanced KL with a per-sample free-bits floor
    Var post_sg = t.stop_gradient(post_probs);
    Var prior_sg = t.stop_gradient(prior_probs);
    auto kl_of = [&](Var q, Var p) {
      return t.colwise_sum(t.mul(q, t.sub(t.log_(q), t.log_(p))));
    };
    Var dyn_kl = t.max_scalar(kl_of(post_sg, prior_probs), cfg_.kl_free);
    Var rep_kl = t.max_scalar(kl_of(post_probs, prior_sg), cfg_.kl_free);

    {
      Eigen::VectorXd kl = kl_cols(t.val(post_probs), t.val(prior_probs));
      for (int lane = 0; lane < lanes; ++lane)
        kl_raw_sum += mask_row(0, lane) * kl[lane];
    }

    Var m_recon = t.mul_elem(recon_err, mask_row);
    Var m_reward = t.mul_elem(reward_err, mask_row);
    Var m_cont = t.mul_elem(cont_err, mask_row);
    Var m_dyn = t.mul_elem(dyn_kl, mask_row);
    Var m_rep = t.mul_elem(rep_kl, mask_row);
    if (first) {
      recon_sum = t.sum_all(m_recon);
      reward_sum = t.sum_all(m_reward);
      cont_sum = t.sum_all(m_cont);
      dyn_sum = t.sum_all(m_dyn);
      rep_sum = t.sum_all(m_rep);
      first = false;
    } else {
      recon_sum = t.add(recon_sum, t.sum_all(m_recon));
      reward_sum = t.add(reward_sum, t.sum_all(m_reward));
      cont_sum = t.add(cont_sum, t.sum_all(m_cont));
      dyn_sum = t.add(dyn_sum, t.sum_all(m_dyn));
      rep_sum = t.add(rep_sum, t.sum_all(m_rep));
    }
  }

  const double norm = mask_total > 0.0 ? mask_total : 1.0;
  Var total = t.scale(
      t.add(t.add(t.add(recon_sum, reward_sum), cont_sum),
            t.add(t.scale(dyn_sum, cfg_.dyn_scale),
                  t.scale(rep_sum, cfg_.rep_scale))),
      1.0 / norm);

  LossReport report;
  report.terms["recon"] = t.scalar(recon_sum) / norm;
  report.terms["reward"] = t.scalar(reward_sum) / norm;
  report.terms["cont"] = t.scalar(cont_sum) / norm;
  report.terms["dyn"] = cfg_.dyn_scale * t.scalar(dyn_sum) / norm;
  report.terms["rep"] = cfg_.rep_scale * t.scalar(rep_sum) / norm;
  report.terms["kl_raw"] = kl_raw_sum / norm;
  report.total = t.scalar(total);

  if (accumulate_grads) {
    t.backward(total);
    t.apply_grads();
  }

  if (posteriors_out) {
    int count = 0;
    for (int step = 0; step < steps; ++step)
      for (int lane = 0; lane < lanes; ++lane)
        count += batch.mask(step, lane) > 0.0;
    posteriors_out->h.resize(cfg_.deter, count);
    posteriors_out->z.resize(cfg_.latent_dim(), count);
    int at = 0;
    for (int step = 0; step < steps; ++step) {
      for (int lane = 0; lane < lanes; ++lane) {
        if (batch.mask(step, lane) <= 0.0) continue;
        posteriors_out->h.col(at) = kept_h[step].col(lane);
        posteriors_out->z.col(at) = kept_z[step].col(lane);
        ++at;
      }
    }
  }
  return report;
}

LossReport WorldModel::train_step(const SequenceBatch& batch, Rng& latent,
                                  ModelState* posteriors_out) {
  auto ps = params();
  opt_.zero_grads(ps);
  LossReport report = evaluate_loss(batch, &latent, false, true,
                                    posteriors_out);
  for (const auto& [name, value] : report.terms) {
    if (!std::isfinite(value)) throw NonFiniteLoss(name);
  }
  if (!std::isfinite(report.total)) throw NonFiniteLoss("total");
  opt_.step(ps);
  report.terms["grad_norm"] = opt_.last_grad_norm();
  for (Param* p : ps) {
    if (!p->value.allFinite()) throw NonFiniteLoss("param:" + p->name);
  }
  return report;
}

std::vector<Param*> WorldModel::params() {
  std::vector<Param*> ps;
  append_params(ps, encoder_.params());
  append_params(ps, seq_in_.params());
  append_params(ps, gru_.params());
  append_params(ps, prior_head_.params());
  append_params(ps, post_head_.params());
  append_params(ps, decoder_.params());
  append_params(ps, reward_head_.params());
  append_params(ps, cont_head_.params());
  ps.push_back(&h0_);
  return ps;
}

}  // namespace entroplan
