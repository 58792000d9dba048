#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace entroplan {

using Mat = Eigen::MatrixXd;

// A learnable matrix together with its gradient accumulator and optimizer
// state. Parameters outlive tapes; tapes bind to them per forward pass.
struct Param {
  std::string name;
  Mat value;
  Mat grad;
  Mat adam_m, adam_v;

  Param() = default;
  Param(std::string n, Mat v) : name(std::move(n)), value(std::move(v)) {
    grad = Mat::Zero(value.rows(), value.cols());
    adam_m = grad;
    adam_v = grad;
  }
  void zero_grad() { grad.setZero(); }
};

// Handle to a tape node; valid until Tape::reset.
struct Var {
  int idx = -1;
};

// Reverse-mode tape over Eigen matrices. Convention: rows are features,
// columns are batch lanes. Nodes are appended in topological order, so the
// backward sweep is a single reverse pass.
class Tape {
 public:
  Var constant(Mat v);
  Var param(Param& p);

  const Mat& val(Var v) const { return nodes_[v.idx].val; }
  double scalar(Var v) const { return nodes_[v.idx].val(0, 0); }

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);                  // elementwise
  Var add_bias(Var a, Var bias);          // bias is n x 1, broadcast over cols
  Var scale(Var a, double s);
  Var add_const(Var a, double c);
  Var mul_elem(Var a, const Mat& m);      // elementwise with a constant
  Var silu(Var a);
  Var tanh_(Var a);
  Var sigmoid(Var a);
  Var log_(Var a);
  Var exp_(Var a);
  Var square(Var a);
  Var softplus(Var a);
  Var layer_norm(Var a, Var gamma, Var beta, double eps = 1e-3);
  Var group_softmax(Var a, int groups, int classes);
  Var concat_rows(const std::vector<Var>& parts);
  Var slice_rows(Var a, int row0, int nrows);
  Var sum_all(Var a);                     // -> 1x1
  Var mean_all(Var a);
  Var colwise_sum(Var a);                 // n x B -> 1 x B
  Var max_scalar(Var a, double c);        // elementwise max with constant
  Var clamp(Var a, double lo, double hi); // zero gradient outside [lo, hi]
  Var minimum(Var a, Var b);              // elementwise; ties take a
  Var stop_gradient(Var a);
  // Forward value is the given one-hot sample; the gradient passes to the
  // probabilities unchanged (sample + probs - sg(probs)).
  Var straight_through(Var probs, const Mat& onehot);

  // Seeds d(root)/d(root) = 1 (root must be 1x1) and sweeps backward.
  void backward(Var root);
  // Adds every bound leaf's gradient into its Param::grad.
  void apply_grads();
  void reset();
  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat val;
    Mat grad;
    bool grad_ready = false;
    bool needs = false;
    Param* bound = nullptr;
    std::function<void(Tape&)> back;
  };

  int push(Mat val, bool needs, std::function<void(Tape&)> back,
           Param* bound = nullptr);
  Mat& grad_of(int idx);
  bool needs(Var v) const { return nodes_[v.idx].needs; }

  std::vector<Node> nodes_;
};

// Adam with optional global-norm gradient clipping (clip <= 0 disables).
class Adam {
 public:
  Adam(double lr, double eps, double clip_norm)
      : lr_(lr), eps_(eps), clip_(clip_norm) {}

  void step(const std::vector<Param*>& params);
  void zero_grads(const std::vector<Param*>& params);
  long steps_taken() const { return t_; }
  void set_steps_taken(long t) { t_ = t; }
  double last_grad_norm() const { return last_norm_; }

 private:
  double lr_, eps_, clip_;
  double beta1_ = 0.9, beta2_ = 0.999;
  long t_ = 0;
  double last_norm_ = 0.0;
};

// Global L2 norm of the gradients of a parameter group.
double grad_norm(const std::vector<Param*>& params);

}  // namespace entroplan
