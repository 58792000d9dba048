#include "entroplan/distmath.hpp"

#include <cmath>

namespace entroplan {

CategoricalDist::CategoricalDist(Eigen::VectorXd probs)
    : probs_(std::move(probs)) {
  if (probs_.size() < 2)
    throw ShapeMismatch("categorical needs at least 2 classes");
  if ((probs_.array() < 0.0).any())
    throw std::invalid_argument("categorical probabilities must be >= 0");
  if (std::abs(probs_.sum() - 1.0) > kProbSumTol)
    throw std::invalid_argument("categorical probabilities must sum to 1");
}

GroupedCategorical::GroupedCategorical(std::vector<CategoricalDist> groups)
    : groups_(std::move(groups)) {
  if (groups_.empty())
    throw ShapeMismatch("grouped categorical needs at least one group");
  const int k = groups_.front().classes();
  for (const auto& g : groups_) {
    if (g.classes() != k)
      throw ShapeMismatch("all groups must share the class count");
  }
}

GroupedCategorical GroupedCategorical::from_flat(const Eigen::VectorXd& flat,
                                                 int groups, int classes) {
  if (flat.size() != static_cast<Eigen::Index>(groups) * classes)
    throw ShapeMismatch("flat vector does not match (groups, classes)");
  std::vector<CategoricalDist> gs;
  gs.reserve(groups);
  for (int g = 0; g < groups; ++g)
    gs.emplace_back(flat.segment(static_cast<Eigen::Index>(g) * classes,
                                 classes));
  return GroupedCategorical(std::move(gs));
}

Eigen::VectorXd GroupedCategorical::flat() const {
  const int k = classes();
  Eigen::VectorXd out(static_cast<Eigen::Index>(groups()) * k);
  for (int g = 0; g < groups(); ++g)
    out.segment(static_cast<Eigen::Index>(g) * k, k) = groups_[g].probs();
  return out;
}

namespace {

double entropy_raw(const Eigen::VectorXd& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > kEntropyZeroTol) h -= p[i] * std::log(p[i]);
  }
  return h;
}

double kl_raw(const Eigen::VectorXd& q, const Eigen::VectorXd& p) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (q[i] <= 0.0) continue;  // 0 ln(0/p) = 0
    if (p[i] <= 0.0)
      throw UndefinedKL("KL undefined: q > 0 where p = 0");
    d += q[i] * std::log(q[i] / p[i]);
  }
  return d;
}

}  // namespace

double entropy(const CategoricalDist& dist) {
  return entropy_raw(dist.probs());
}

double entropy(const GroupedCategorical& dist) {
  double h = 0.0;
  for (int g = 0; g < dist.groups(); ++g) h += entropy(dist.group(g));
  return h;
}

double kl_divergence(const CategoricalDist& q, const CategoricalDist& p) {
  if (q.classes() != p.classes())
    throw ShapeMismatch("KL operands must share the class count");
  return kl_raw(q.probs(), p.probs());
}

double kl_divergence(const GroupedCategorical& q,
                     const GroupedCategorical& p) {
  if (q.groups() != p.groups() || q.classes() != p.classes())
    throw ShapeMismatch("KL operands must share (groups, classes)");
  double d = 0.0;
  for (int g = 0; g < q.groups(); ++g)
    d += kl_divergence(q.group(g), p.group(g));
  return d;
}

double information_gain(const Eigen::MatrixXd& joint) {
  if ((joint.array() < 0.0).any())
    throw std::invalid_argument("joint probabilities must be >= 0");
  if (std::abs(joint.sum() - 1.0) > kProbSumTol)
    throw std::invalid_argument("joint probabilities must sum to 1");

  const Eigen::VectorXd py = joint.rowwise().sum();
  const Eigen::VectorXd px = joint.colwise().sum();

  // form 1: H(Y) - H(Y|X)
  double h_y_given_x = 0.0;
  for (Eigen::Index x = 0; x < joint.cols(); ++x) {
    if (px[x] <= kEntropyZeroTol) continue;
    h_y_given_x += px[x] * entropy_raw(joint.col(x) / px[x]);
  }
  const double gain = entropy_raw(py) - h_y_given_x;

  // form 2: sum_x p(x) KL(p(Y|x) || p(Y)); the two must agree
  double expected_kl = 0.0;
  for (Eigen::Index x = 0; x < joint.cols(); ++x) {
    if (px[x] <= kEntropyZeroTol) continue;
    const Eigen::VectorXd cond = joint.col(x) / px[x];
    double d = 0.0;
    for (Eigen::Index y = 0; y < cond.size(); ++y) {
      if (cond[y] > kEntropyZeroTol) d += cond[y] * std::log(cond[y] / py[y]);
    }
    expected_kl += px[x] * d;
  }
  if (std::abs(gain - expected_kl) > 1e-9)
    throw std::logic_error("information gain forms disagree");
  return gain;
}

GroupedCategorical mixture(const std::vector<GroupedCategorical>& components,
                           const Eigen::VectorXd& weights) {
  if (components.empty() ||
      weights.size() != static_cast<Eigen::Index>(components.size()))
    throw ShapeMismatch("mixture needs one weight per component");
  if ((weights.array() < 0.0).any() ||
      std::abs(weights.sum() - 1.0) > kProbSumTol)
    throw std::invalid_argument("mixture weights must form a simplex");

  const int g_count = components.front().groups();
  const int k = components.front().classes();
  for (const auto& c : components) {
    if (c.groups() != g_count || c.classes() != k)
      throw ShapeMismatch("mixture components must share (groups, classes)");
  }

  Eigen::VectorXd flat =
      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g_count) * k);
  for (size_t i = 0; i < components.size(); ++i)
    flat += weights[static_cast<Eigen::Index>(i)] * components[i].flat();
  // renormalize each group so accumulated rounding cannot trip validation
  for (int g = 0; g < g_count; ++g) {
    auto seg = flat.segment(static_cast<Eigen::Index>(g) * k, k);
    seg /= seg.sum();
  }
  return GroupedCategorical::from_flat(flat, g_count, k);
}

Eigen::VectorXd entropy_cols(const Eigen::MatrixXd& probs) {
  Eigen::VectorXd out(probs.cols());
  for (Eigen::Index c = 0; c < probs.cols(); ++c)
    out[c] = entropy_raw(probs.col(c));
  return out;
}

Eigen::VectorXd kl_cols(const Eigen::MatrixXd& q, const Eigen::MatrixXd& p) {
  if (q.rows() != p.rows() || q.cols() != p.cols())
    throw ShapeMismatch("kl_cols operands must match in shape");
  Eigen::VectorXd out(q.cols());
  for (Eigen::Index c = 0; c < q.cols(); ++c)
    out[c] = kl_raw(q.col(c), p.col(c));
  return out;
}

}  // namespace entroplan
