#include "entroplan/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "entroplan/errors.hpp"

namespace entroplan {

int Tape::push(Mat val, bool needs, std::function<void(Tape&)> back,
               Param* bound) {
  Node n;
  n.val = std::move(val);
  n.needs = needs;
  n.back = std::move(back);
  n.bound = bound;
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Mat& Tape::grad_of(int idx) {
  Node& n = nodes_[idx];
  if (!n.grad_ready) {
    n.grad = Mat::Zero(n.val.rows(), n.val.cols());
    n.grad_ready = true;
  }
  return n.grad;
}

Var Tape::constant(Mat v) { return {push(std::move(v), false, nullptr)}; }

Var Tape::param(Param& p) { return {push(p.value, true, nullptr, &p)}; }

Var Tape::matmul(Var a, Var b) {
  const int ia = a.idx, ib = b.idx;
  Mat out = nodes_[ia].val * nodes_[ib].val;
  const bool ng = needs(a) || needs(b);
  int idx = push(std::move(out), ng, nullptr);
  nodes_[idx].back = [ia, ib, idx](Tape& t) {
    const Mat& g = t.grad_of(idx);
    if (t.nodes_[ia].needs)
      t.grad_of(ia).noalias() += g * t.nodes_[ib].val.transpose();
    if (t.nodes_[ib].needs)
      t.grad_of(ib).noalias() += t.nodes_[ia].val.transpose() * g;
  };
  return {idx};
}

Var Tape::add(Var a, Var b) {
  const int ia = a.idx, ib = b.idx;
  Mat out = nodes_[ia].val + nodes_[ib].val;
  const bool ng = needs(a) || needs(b);
  int idx = push(std::move(out), ng, nullptr);
  nodes_[idx].back = [ia, ib, idx](Tape& t) {
    const Mat& g = t.grad_of(idx);
    if (t.nodes_[ia].needs) t.grad_of(ia) += g;
    if (t.nodes_[ib].needs) t.grad_of(ib) += g;
  };
  return {idx};
}

Var Tape::sub(Var a, Var b) {
  const int ia = a.idx, ib = b.idx;
  Mat out = nodes_[ia].val - nodes_[ib].val;
  const bool ng = needs(a) || needs(b);
  int idx = push(std::move(out), ng, nullptr);
  nodes_[idx].back = [ia, ib, idx](Tape& t) {
    const Mat& g = t.grad_of(idx);
    if (t.nodes_[ia].needs) t.grad_of(ia) += g;
    if (t.nodes_[ib].needs) t.grad_of(ib) -= g;
  };
  return {idx};
}

Var Tape::mul(Var a, Var b) {
  const int ia = a.idx, ib = b.idx;
  Mat out = nodes_[ia].val.cwiseProduct(nodes_[ib].val);
  const bool ng = needs(a) || needs(b);
  int idx = push(std::move(out), ng, nullptr);
  nodes_[idx].back = [ia, ib, idx](Tape& t) {
    const Mat& g = t.grad_of(idx);
    if (t.nodes_[ia].needs)
      t.grad_of(ia) += g.cwiseProduct(t.nodes_[ib].val);
    if (t.nodes_[ib].needs)
      t.grad_of(ib) += g.cwiseProduct(t.nodes_[ia].val);
  };
  return {idx};
}

Var Tape::add_bias(Var a, Var bias) {
  const int ia = a.idx, ib = bias.idx;
  Mat out = nodes_[ia].val.colwise() +
            Eigen::VectorXd(nodes_[ib].val.col(0));
  const bool ng = needs(a) || needs(bias);
  int idx = push(std::move(out), ng, nullptr);
  nodes_[idx].back = [ia, ib, idx](Tape& t) {
    const Mat& g = t.grad_of(idx);
    if (t.nodes_[ia].needs) t.grad_of(ia) += g;
    if (t.nodes_[ib].needs) t.grad_of(ib) += g.rowwise().sum();
  };
  return {idx};
}

Var Tape::scale(Var a, double s) {
  const int ia = a.idx;
  Mat out = nodes_[ia].val * s;
  int idx = push(std::move(out), needs(a), nullptr);
  nodes_[idx].back = [ia, s, idx](Tape& t) {
    if (t.nodes_[ia].needs) t.grad_of(ia) += s * t.grad_of(idx);
  };
  return {idx};
}

Var Tape::add_const(Var a, double c) {
  const int ia = a.idx;
  Mat out = nodes_[ia].val.array() + c;
  int idx = push(std::move(out), needs(a), nullptr);
  nodes_[idx].back = [ia, idx](Tape& t) {
    if (t.nodes_[ia].needs) t.grad_of(ia) += t.grad_of(idx);
  };
  return {idx};
}

Var Tape::mul_elem(Var a, const Mat& m) {
  const int ia = a.idx;
  Mat out = nodes_[ia].val.cwiseProduct(m);
  int idx = push(std::move(out), needs(a), nullptr);
  Mat m_copy = m;
  nodes_[idx].back = [ia, idx, m_copy](Tape& t) {
    if (t.nodes_[ia].needs)
      t.grad_of(ia) += t.grad_of(idx).cwiseProduct(m_copy);
  };
  return {idx};
}

Var Tape::silu(Var a) {
  const int ia = a.idx;
  const Mat& x = nodes_[ia].val;
  Mat sig = (1.0 / (1.0 + (-x.array()).exp())).matrix();
  Mat out = x.cwiseProduct(sig);
  int idx = push(std::move(out), needs(a), nullptr);
  nodes_[idx].back = [ia, idx, sig](Tape& t) {
    if (!t.nodes_[ia].needs) return;
    const Mat& x = t.nodes_[ia].val;
    // d silu = sig * (1 + x * (1 - sig))
    Mat d = sig.array() * (1.0 + x.array() * (1.0 - sig.array()));
    t.grad_of(ia) += t.grad_of(idx).cwiseProduct(d);
  };
  return {idx};
}

Var Tape::tanh_(Var a) {
  const int ia = a.idx;
  Mat out = nodes_[ia].val.array().tanh();
  int idx = push(std::move(out), needs(a), nullptr);
  nodes_[idx].back = [ia, idx](Tape& t) {
    if (!t.nodes_[ia].needs) return;
    const Mat& y = t.nodes_[idx].val;
    t.grad_of(ia).array() +=
        t.grad_of(idx).array() * (1.0 - y.array().square());
  };
  return {idx};
}

Var Tape::sigmoid(Var a) {
  const int ia = a.idx;
  Mat out = (1.0 / (1.0 + (-nodes_[ia].val.array()).exp())).matrix();
  int idx = push(std::move(out), needs(a), nullptr);
  nodes_[idx].back = [ia, idx](Tape& t) {
    if (!t.nodes_[ia].needs) return;
    const Mat& y = t.nodes_[idx].val;
    t.grad_of(ia).array() +=
        t.grad_of(idx).array() * y.array() * (1.0 - y.array());
  };
  return {idx};
}

Var Tape::log_(Var a) {
  const int ia = a.idx;
  Mat out = nodes_[ia].val.array().log();
  int idx = push(std::move(out), needs(a), nullptr);
  nodes_[idx].back = [ia, idx](Tape& t) {
    if (!t.nodes_[ia].needs) return;
    t.grad_of(ia).array() +=
        t.grad_of(idx).array() / t.nodes_[ia].val.array();
  };
  return {idx};
}

Var Tape::exp_(Var a) {
  const int ia = a.idx;
  Mat out = nodes_[ia].val.array().exp();
  int idx = push(std::move(out), needs(a), nullptr);
  nodes_[idx].back = [ia, idx](Tape& t) {
    if (!t.nodes_[ia].needs) return;
    t.grad_of(ia).array() +=
        t.grad_of(idx).array() * t.nodes_[idx].val.array();
  };
  return {idx};
}

Var Tape::square(Var a) {
  const int ia = a.idx;
  Mat out = nodes_[ia].val.array().square();
  int idx = push(std::move(out), needs(a), nullptr);
  nodes_[idx].back = [ia, idx](Tape& t) {
    if (!t.nodes_[ia].needs) return;
    t.grad_of(ia).array() +=
        2.0 * t.grad_of(idx).array() * t.nodes_[ia].val.array();
  };
  return {idx};
}

Var Tape::softplus(Var a) {
  const int ia = a.idx;
  // log(1 + e^x), stable for large |x|
  Mat out = nodes_[ia].val.unaryExpr([](double x) {
    return x > 30.0 ? x : std::log1p(std::exp(x));
  });
  int idx = push(std::move(out), needs(a), nullptr);
  nodes_[idx].back = [ia, idx](Tape& t) {
    if (!t.nodes_[ia].needs) return;
    Mat sig = (1.0 / (1.0 + (-t.nodes_[ia].val.array()).exp())).matrix();
    t.grad_of(ia) += t.grad_of(idx).cwiseProduct(sig);
  };
  return {idx};
}

Var Tape::layer_norm(Var a, Var gamma, Var beta, double eps) {
  const int ia = a.idx, ig = gamma.idx, ib = beta.idx;
  const Mat& x = nodes_[ia].val;
  const Eigen::Index n = x.rows();
  Eigen::RowVectorXd mean = x.colwise().mean();
  Mat centered = x.rowwise() - mean;
  Eigen::RowVectorXd var = centered.array().square().colwise().mean();
  Eigen::RowVectorXd inv_std = (var.array() + eps).sqrt().inverse();
  Mat xhat = centered.array().rowwise() * inv_std.array();
  Mat out = (xhat.array().colwise() *
             nodes_[ig].val.col(0).array())
                .colwise() +
            nodes_[ib].val.col(0).array();
  const bool ng = needs(a) || needs(gamma) || needs(beta);
  int idx = push(std::move(out), ng, nullptr);
  nodes_[idx].back = [ia, ig, ib, idx, xhat, inv_std, n](Tape& t) {
    const Mat& g = t.grad_of(idx);
    if (t.nodes_[ig].needs)
      t.grad_of(ig).col(0) += g.cwiseProduct(xhat).rowwise().sum();
    if (t.nodes_[ib].needs) t.grad_of(ib).col(0) += g.rowwise().sum();
    if (t.nodes_[ia].needs) {
      // dx = inv_std * (dy*gamma - mean(dy*gamma) - xhat * mean(dy*gamma*xhat))
      Mat gy = g.array().colwise() * t.nodes_[ig].val.col(0).array();
      Eigen::RowVectorXd m1 = gy.colwise().mean();
      Eigen::RowVectorXd m2 = gy.cwiseProduct(xhat).colwise().mean();
      Mat dx = gy;
      dx.rowwise() -= m1;
      dx -= (xhat.array().rowwise() * m2.array()).matrix();
      dx.array().rowwise() *= inv_std.array();
      t.grad_of(ia) += dx;
      (void)n;
    }
  };
  return {idx};
}

Var Tape::group_softmax(Var a, int groups, int classes) {
  const int ia = a.idx;
  const Mat& x = nodes_[ia].val;
  if (x.rows() != static_cast<Eigen::Index>(groups) * classes)
    throw ShapeMismatch("group_softmax rows != groups * classes");
  Mat out(x.rows(), x.cols());
  for (int g = 0; g < groups; ++g) {
    auto block = x.middleRows(static_cast<Eigen::Index>(g) * classes, classes);
    Eigen::RowVectorXd mx = block.colwise().maxCoeff();
    Mat e = (block.rowwise() - mx).array().exp();
    Eigen::RowVectorXd z = e.colwise().sum();
    out.middleRows(static_cast<Eigen::Index>(g) * classes, classes) =
        e.array().rowwise() / z.array();
  }
  int idx = push(std::move(out), needs(a), nullptr);
  nodes_[idx].back = [ia, idx, groups, classes](Tape& t) {
    if (!t.nodes_[ia].needs) return;
    const Mat& p = t.nodes_[idx].val;
    const Mat& g = t.grad_of(idx);
    Mat dx(p.rows(), p.cols());
    for (int gi = 0; gi < groups; ++gi) {
      auto pb = p.middleRows(static_cast<Eigen::Index>(gi) * classes, classes);
      auto gb = g.middleRows(static_cast<Eigen::Index>(gi) * classes, classes);
      Eigen::RowVectorXd dot = pb.cwiseProduct(gb).colwise().sum();
      dx.middleRows(static_cast<Eigen::Index>(gi) * classes, classes) =
          pb.array() * (gb.rowwise() - dot).array();
    }
    t.grad_of(ia) += dx;
  };
  return {idx};
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  Eigen::Index rows = 0;
  const Eigen::Index cols = nodes_[parts.front().idx].val.cols();
  bool ng = false;
  for (Var p : parts) {
    rows += nodes_[p.idx].val.rows();
    ng = ng || needs(p);
    if (nodes_[p.idx].val.cols() != cols)
      throw ShapeMismatch("concat_rows: column counts differ");
  }
  Mat out(rows, cols);
  Eigen::Index r = 0;
  std::vector<int> ids;
  std::vector<Eigen::Index> offsets, sizes;
  for (Var p : parts) {
    const Mat& v = nodes_[p.idx].val;
    out.middleRows(r, v.rows()) = v;
    ids.push_back(p.idx);
    offsets.push_back(r);
    sizes.push_back(v.rows());
    r += v.rows();
  }
  int idx = push(std::move(out), ng, nullptr);
  nodes_[idx].back = [ids, offsets, sizes, idx](Tape& t) {
    const Mat& g = t.grad_of(idx);
    for (size_t i = 0; i < ids.size(); ++i) {
      if (t.nodes_[ids[i]].needs)
        t.grad_of(ids[i]) += g.middleRows(offsets[i], sizes[i]);
    }
  };
  return {idx};
}

Var Tape::slice_rows(Var a, int row0, int nrows) {
  const int ia = a.idx;
  Mat out = nodes_[ia].val.middleRows(row0, nrows);
  int idx = push(std::move(out), needs(a), nullptr);
  nodes_[idx].back = [ia, idx, row0, nrows](Tape& t) {
    if (t.nodes_[ia].needs)
      t.grad_of(ia).middleRows(row0, nrows) += t.grad_of(idx);
  };
  return {idx};
}

Var Tape::sum_all(Var a) {
  const int ia = a.idx;
  Mat out(1, 1);
  out(0, 0) = nodes_[ia].val.sum();
  int idx = push(std::move(out), needs(a), nullptr);
  nodes_[idx].back = [ia, idx](Tape& t) {
    if (t.nodes_[ia].needs)
      t.grad_of(ia).array() += t.grad_of(idx)(0, 0);
  };
  return {idx};
}

Var Tape::mean_all(Var a) {
  const int ia = a.idx;
  const double n = static_cast<double>(nodes_[ia].val.size());
  Mat out(1, 1);
  out(0, 0) = nodes_[ia].val.sum() / n;
  int idx = push(std::move(out), needs(a), nullptr);
  nodes_[idx].back = [ia, idx, n](Tape& t) {
    if (t.nodes_[ia].needs)
      t.grad_of(ia).array() += t.grad_of(idx)(0, 0) / n;
  };
  return {idx};
}

Var Tape::colwise_sum(Var a) {
  const int ia = a.idx;
  Mat out = nodes_[ia].val.colwise().sum();
  int idx = push(std::move(out), needs(a), nullptr);
  nodes_[idx].back = [ia, idx](Tape& t) {
    if (!t.nodes_[ia].needs) return;
    const Mat& g = t.grad_of(idx);  // 1 x B
    t.grad_of(ia).array().rowwise() += g.row(0).array();
  };
  return {idx};
}

Var Tape::max_scalar(Var a, double c) {
  const int ia = a.idx;
  Mat out = nodes_[ia].val.cwiseMax(c);
  int idx = push(std::move(out), needs(a), nullptr);
  nodes_[idx].back = [ia, idx, c](Tape& t) {
    if (!t.nodes_[ia].needs) return;
    Mat mask = (t.nodes_[ia].val.array() > c).cast<double>();
    t.grad_of(ia) += t.grad_of(idx).cwiseProduct(mask);
  };
  return {idx};
}

Var Tape::clamp(Var a, double lo, double hi) {
  const int ia = a.idx;
  Mat out = nodes_[ia].val.cwiseMax(lo).cwiseMin(hi);
  int idx = push(std::move(out), needs(a), nullptr);
  nodes_[idx].back = [ia, idx, lo, hi](Tape& t) {
    if (!t.nodes_[ia].needs) return;
    const Mat& x = t.nodes_[ia].val;
    Mat mask =
        ((x.array() >= lo) && (x.array() <= hi)).cast<double>();
    t.grad_of(ia) += t.grad_of(idx).cwiseProduct(mask);
  };
  return {idx};
}

Var Tape::minimum(Var a, Var b) {
  const int ia = a.idx, ib = b.idx;
  Mat out = nodes_[ia].val.cwiseMin(nodes_[ib].val);
  const bool ng = needs(a) || needs(b);
  int idx = push(std::move(out), ng, nullptr);
  nodes_[idx].back = [ia, ib, idx](Tape& t) {
    const Mat& g = t.grad_of(idx);
    Mat take_a =
        (t.nodes_[ia].val.array() <= t.nodes_[ib].val.array()).cast<double>();
    if (t.nodes_[ia].needs) t.grad_of(ia) += g.cwiseProduct(take_a);
    if (t.nodes_[ib].needs)
      t.grad_of(ib) += g.cwiseProduct((1.0 - take_a.array()).matrix());
  };
  return {idx};
}

Var Tape::stop_gradient(Var a) {
  return constant(nodes_[a.idx].val);
}

Var Tape::straight_through(Var probs, const Mat& onehot) {
  const int ip = probs.idx;
  if (onehot.rows() != nodes_[ip].val.rows() ||
      onehot.cols() != nodes_[ip].val.cols())
    throw ShapeMismatch("straight_through: sample shape != probs shape");
  int idx = push(onehot, needs(probs), nullptr);
  nodes_[idx].back = [ip, idx](Tape& t) {
    if (t.nodes_[ip].needs) t.grad_of(ip) += t.grad_of(idx);
  };
  return {idx};
}

void Tape::backward(Var root) {
  if (nodes_[root.idx].val.size() != 1)
    throw std::logic_error("backward root must be a scalar");
  grad_of(root.idx)(0, 0) = 1.0;
  for (int i = root.idx; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.back && n.needs && n.grad_ready) n.back(*this);
  }
}

void Tape::apply_grads() {
  for (Node& n : nodes_) {
    if (n.bound && n.grad_ready) n.bound->grad += n.grad;
  }
}

void Tape::reset() { nodes_.clear(); }

double grad_norm(const std::vector<Param*>& params) {
  double sq = 0.0;
  for (const Param* p : params) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

void Adam::step(const std::vector<Param*>& params) {
  last_norm_ = grad_norm(params);
  double scale = 1.0;
  if (clip_ > 0.0 && last_norm_ > clip_) scale = clip_ / last_norm_;
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (Param* p : params) {
    Mat g = p->grad * scale;
    p->adam_m = beta1_ * p->adam_m + (1.0 - beta1_) * g;
    p->adam_v =
        (beta2_ * p->adam_v.array() + (1.0 - beta2_) * g.array().square())
            .matrix();
    Mat mhat = p->adam_m / bc1;
    Mat vhat = p->adam_v / bc2;
    p->value.array() -= lr_ * mhat.array() / (vhat.array().sqrt() + eps_);
  }
}

void Adam::zero_grads(const std::vector<Param*>& params) {
  for (Param* p : params) p->zero_grad();
}

}  // namespace entroplan
