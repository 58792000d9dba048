#include "entroplan/nn.hpp"

#include <cmath>

namespace entroplan {

Mat he_normal(Rng& rng, int rows, int cols, double scale) {
  const double std = scale * std::sqrt(2.0 / static_cast<double>(cols));
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = std * rng.normal();
  return m;
}

Mat xavier_normal(Rng& rng, int rows, int cols, double scale) {
  const double std =
      scale * std::sqrt(2.0 / static_cast<double>(rows + cols));
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = std * rng.normal();
  return m;
}

Linear::Linear(const std::string& name, int in, int out, Rng& rng,
               double outscale, Init init)
    : w(name + ".w", init == Init::kHe ? he_normal(rng, out, in, outscale)
                                       : xavier_normal(rng, out, in, outscale)),
      b(name + ".b", Mat::Zero(out, 1)) {}

Var Linear::apply(Tape& t, Var x) const {
  Param& wp = const_cast<Param&>(w);
  Param& bp = const_cast<Param&>(b);
  return t.add_bias(t.matmul(t.param(wp), x), t.param(bp));
}

Mat Linear::apply(const Mat& x) const {
  return (w.value * x).colwise() + Eigen::VectorXd(b.value.col(0));
}

std::vector<Param*> Linear::params() { return {&w, &b}; }

LayerNorm::LayerNorm(const std::string& name, int dim)
    : gamma(name + ".gamma", Mat::Ones(dim, 1)),
      beta(name + ".beta", Mat::Zero(dim, 1)) {}

Var LayerNorm::apply(Tape& t, Var x) const {
  Param& g = const_cast<Param&>(gamma);
  Param& b = const_cast<Param&>(beta);
  return t.layer_norm(x, t.param(g), t.param(b), eps);
}

Mat LayerNorm::apply(const Mat& x) const {
  Eigen::RowVectorXd mean = x.colwise().mean();
  Mat centered = x.rowwise() - mean;
  Eigen::RowVectorXd var = centered.array().square().colwise().mean();
  Eigen::RowVectorXd inv_std = (var.array() + eps).sqrt().inverse();
  Mat xhat = centered.array().rowwise() * inv_std.array();
  return (xhat.array().colwise() * gamma.value.col(0).array()).colwise() +
         beta.value.col(0).array();
}

std::vector<Param*> LayerNorm::params() { return {&gamma, &beta}; }

DenseBlock::DenseBlock(const std::string& name, int in, int out, Rng& rng,
                       Init init)
    : lin(name + ".lin", in, out, rng, 1.0, init), norm(name + ".norm", out) {}

Var DenseBlock::apply(Tape& t, Var x) const {
  return t.silu(norm.apply(t, lin.apply(t, x)));
}

Mat DenseBlock::apply(const Mat& x) const {
  Mat y = norm.apply(lin.apply(x));
  return y.array() / (1.0 + (-y.array()).exp());
}

std::vector<Param*> DenseBlock::params() {
  auto ps = lin.params();
  append_params(ps, norm.params());
  return ps;
}

Mlp::Mlp(const std::string& name, int in, const std::vector<int>& hidden_dims,
         int out_dim, Rng& rng, double outscale, Init init) {
  int cur = in;
  for (size_t i = 0; i < hidden_dims.size(); ++i) {
    hidden.emplace_back(name + ".h" + std::to_string(i), cur, hidden_dims[i],
                        rng, init);
    cur = hidden_dims[i];
  }
  out = Linear(name + ".out", cur, out_dim, rng, outscale, init);
}

Var Mlp::apply(Tape& t, Var x) const {
  Var cur = x;
  for (const auto& blk : hidden) cur = blk.apply(t, cur);
  return out.apply(t, cur);
}

Mat Mlp::apply(const Mat& x) const {
  Mat cur = x;
  for (const auto& blk : hidden) cur = blk.apply(cur);
  return out.apply(cur);
}

std::vector<Param*> Mlp::params() {
  std::vector<Param*> ps;
  for (auto& blk : hidden) append_params(ps, blk.params());
  append_params(ps, out.params());
  return ps;
}

GruCell::GruCell(const std::string& name, int in, int deter_dim, Rng& rng)
    : gates(name + ".gates", in + deter_dim, 3 * deter_dim, rng),
      norm(name + ".norm", 3 * deter_dim),
      deter(deter_dim) {}

Var GruCell::apply(Tape& t, Var x, Var h) const {
  Var parts = norm.apply(t, gates.apply(t, t.concat_rows({x, h})));
  Var reset = t.sigmoid(t.slice_rows(parts, 0, deter));
  Var cand_pre = t.slice_rows(parts, deter, deter);
  Var update = t.sigmoid(t.add_const(t.slice_rows(parts, 2 * deter, deter),
                                     -1.0));
  Var cand = t.tanh_(t.mul(reset, cand_pre));
  // h' = u * cand + (1 - u) * h
  Var keep = t.add_const(t.scale(update, -1.0), 1.0);
  return t.add(t.mul(update, cand), t.mul(keep, h));
}

Mat GruCell::apply(const Mat& x, const Mat& h) const {
  Mat xin(x.rows() + h.rows(), x.cols());
  xin << x, h;
  Mat parts = norm.apply(gates.apply(xin));
  Mat reset =
      (1.0 / (1.0 + (-parts.topRows(deter).array()).exp())).matrix();
  Mat cand_pre = parts.middleRows(deter, deter);
  Mat update =
      (1.0 / (1.0 + (-(parts.bottomRows(deter).array() - 1.0)).exp()))
          .matrix();
  Mat cand = reset.cwiseProduct(cand_pre).array().tanh();
  return update.cwiseProduct(cand) +
         (1.0 - update.array()).matrix().cwiseProduct(h);
}

std::vector<Param*> GruCell::params() {
  auto ps = gates.params();
  append_params(ps, norm.params());
  return ps;
}

void append_params(std::vector<Param*>& into, std::vector<Param*> more) {
  into.insert(into.end(), more.begin(), more.end());
}

}  // namespace entroplan
