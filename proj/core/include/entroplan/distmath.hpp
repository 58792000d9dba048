#pragma once

#include <Eigen/Dense>
#include <vector>

#include "entroplan/errors.hpp"

namespace entroplan {

// Entropy works in nats throughout (natural log), matching the KL training
// loss. Probabilities below kEntropyZeroTol are treated as exact zeros for
// entropy terms (0 ln 0 := 0) but not for KL denominators.
inline constexpr double kProbSumTol = 1e-9;
inline constexpr double kEntropyZeroTol = 1e-12;

// A single K-way probability vector. Validated at construction so the hot
// loops can assume a well-formed distribution.
class CategoricalDist {
 public:
  explicit CategoricalDist(Eigen::VectorXd probs);

  const Eigen::VectorXd& probs() const { return probs_; }
  int classes() const { return static_cast<int>(probs_.size()); }

 private:
  Eigen::VectorXd probs_;
};

// G independent K-way categoricals sharing K.
class GroupedCategorical {
 public:
  explicit GroupedCategorical(std::vector<CategoricalDist> groups);

  // Builds from a stacked (G*K)-vector laid out group-major.
  static GroupedCategorical from_flat(const Eigen::VectorXd& flat, int groups,
                                      int classes);

  int groups() const { return static_cast<int>(groups_.size()); }
  int classes() const { return groups_.front().classes(); }
  const CategoricalDist& group(int g) const { return groups_.at(g); }
  Eigen::VectorXd flat() const;

 private:
  std::vector<CategoricalDist> groups_;
};

// Shannon entropy in nats: sum over groups of -sum_k p_k ln p_k.
double entropy(const CategoricalDist& dist);
double entropy(const GroupedCategorical& dist);

// KL(q || p) in nats, summed over groups. Throws UndefinedKL when q puts mass
// where p has none.
double kl_divergence(const CategoricalDist& q, const CategoricalDist& p);
double kl_divergence(const GroupedCategorical& q, const GroupedCategorical& p);

// Information gain of Y from observing X, given the joint p(y, x) with Y on
// rows and X on columns. Computes H(Y) - H(Y|X) and cross-checks it against
// the expected-KL form sum_x p(x) KL(p(Y|x) || p(Y)).
double information_gain(const Eigen::MatrixXd& joint);

// Group-wise convex combination of distributions under simplex weights.
GroupedCategorical mixture(const std::vector<GroupedCategorical>& components,
                           const Eigen::VectorXd& weights);

// Column-batched helpers used by the model code. Each column of `probs` is a
// stacked grouped distribution; entropy and KL add across groups, so the
// group layout does not matter here.
Eigen::VectorXd entropy_cols(const Eigen::MatrixXd& probs);
Eigen::VectorXd kl_cols(const Eigen::MatrixXd& q, const Eigen::MatrixXd& p);

}  // namespace entroplan
