#pragma once

#include <string>
#include <vector>

#include "entroplan/autodiff.hpp"
#include "entroplan/rng.hpp"

namespace entroplan {

// Weight initializers. Scale multiplies the canonical standard deviation, so
// heads can be flattened toward zero output at construction.
Mat he_normal(Rng& rng, int rows, int cols, double scale = 1.0);
Mat xavier_normal(Rng& rng, int rows, int cols, double scale = 1.0);

enum class Init { kXavier, kHe };

struct Linear {
  Param w, b;

  Linear() = default;
  Linear(const std::string& name, int in, int out, Rng& rng,
         double outscale = 1.0, Init init = Init::kXavier);

  Var apply(Tape& t, Var x) const;
  Mat apply(const Mat& x) const;
  std::vector<Param*> params();
  int out_dim() const { return static_cast<int>(w.value.rows()); }
};

struct LayerNorm {
  Param gamma, beta;
  double eps = 1e-3;

  LayerNorm() = default;
  LayerNorm(const std::string& name, int dim);

  Var apply(Tape& t, Var x) const;
  Mat apply(const Mat& x) const;
  std::vector<Param*> params();
};

// Linear -> LayerNorm -> SiLU, the standard hidden block.
struct DenseBlock {
  Linear lin;
  LayerNorm norm;

  DenseBlock() = default;
  DenseBlock(const std::string& name, int in, int out, Rng& rng,
             Init init = Init::kXavier);

  Var apply(Tape& t, Var x) const;
  Mat apply(const Mat& x) const;
  std::vector<Param*> params();
};

// Stack of DenseBlocks followed by a plain linear output layer.
struct Mlp {
  std::vector<DenseBlock> hidden;
  Linear out;

  Mlp() = default;
  Mlp(const std::string& name, int in, const std::vector<int>& hidden_dims,
      int out_dim, Rng& rng, double outscale = 1.0,
      Init init = Init::kXavier);

  Var apply(Tape& t, Var x) const;
  Mat apply(const Mat& x) const;
  std::vector<Param*> params();
};

// Gated recurrent cell with layer-normalized gates. One linear maps
// [input; state] to the three gate pre-activations; the update gate carries a
// -1 bias so fresh cells favour keeping state.
struct GruCell {
  Linear gates;  // (in + deter) -> 3 * deter, no separate bias use
  LayerNorm norm;
  int deter = 0;

  GruCell() = default;
  GruCell(const std::string& name, int in, int deter_dim, Rng& rng);

  Var apply(Tape& t, Var x, Var h) const;
  Mat apply(const Mat& x, const Mat& h) const;
  std::vector<Param*> params();
};

// Serialization of raw parameter values (optimizer state excluded); used by
// checkpointing together with the optimizer's own state dump.
void append_params(std::vector<Param*>& into, std::vector<Param*> more);

}  // namespace entroplan
