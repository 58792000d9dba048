#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string_view>

namespace entroplan {

uint64_t splitmix64(uint64_t x);
uint64_t fnv1a64(std::string_view s);

// Deterministic random stream. All sampling helpers are implemented on top of
// the raw 64-bit engine output so draws are reproducible across platforms and
// independent of standard-library distribution internals.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t raw() { return engine_(); }

  // [0, 1)
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // [0, n)
  int uniform_int(int n);

  // standard normal via Box-Muller (no spare caching, for simple state)
  double normal();

  // inverse-CDF draw; probs need not be perfectly normalized
  int categorical(std::span<const double> probs);
  int categorical(const double* probs, int n) {
    return categorical(std::span<const double>(probs, static_cast<size_t>(n)));
  }

  void save(std::ostream& os) const;
  void load(std::istream& is);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

// Named per-purpose streams derived from one run seed. Keeping streams
// separate means consuming draws in one subsystem never perturbs another.
class RngPool {
 public:
  explicit RngPool(uint64_t run_seed);

  Rng& env() { return env_; }
  Rng& model_init() { return model_init_; }
  Rng& imagination() { return imagination_; }
  Rng& latent() { return latent_; }
  Rng& collection() { return collection_; }
  Rng& meta() { return meta_; }

  void save(std::ostream& os) const;
  void load(std::istream& is);

 private:
  Rng env_, model_init_, imagination_, latent_, collection_, meta_;
};

}  // namespace entroplan
