#include "entroplan/rng.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace entroplan {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

int Rng::uniform_int(int n) {
  if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
  // rejection sampling to avoid modulo bias
  const uint64_t limit = UINT64_MAX - UINT64_MAX % static_cast<uint64_t>(n);
  uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<int>(x % static_cast<uint64_t>(n));
}

double Rng::normal() {
  const double u1 = 1.0 - uniform01();  // (0, 1]
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

int Rng::categorical(std::span<const double> probs) {
  if (probs.empty()) throw std::invalid_argument("categorical: empty probs");
  double total = 0.0;
  for (double p : probs) total += p;
  double u = uniform01() * total;
  for (size_t i = 0; i < probs.size(); ++i) {
    u -= probs[i];
    if (u < 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

void Rng::save(std::ostream& os) const { os << engine_ << '\n'; }

void Rng::load(std::istream& is) { is >> engine_; }

namespace {
uint64_t stream_seed(uint64_t run_seed, std::string_view name) {
  return splitmix64(run_seed ^ fnv1a64(name));
}
}  // namespace

RngPool::RngPool(uint64_t run_seed)
    : env_(stream_seed(run_seed, "env")),
      model_init_(stream_seed(run_seed, "model_init")),
      imagination_(stream_seed(run_seed, "imagination")),
      latent_(stream_seed(run_seed, "latent")),
      collection_(stream_seed(run_seed, "collection")),
      meta_(stream_seed(run_seed, "meta")) {}

void RngPool::save(std::ostream& os) const {
  env_.save(os);
  model_init_.save(os);
  imagination_.save(os);
  latent_.save(os);
  collection_.save(os);
  meta_.save(os);
}

void RngPool::load(std::istream& is) {
  env_.load(is);
  model_init_.load(is);
  imagination_.load(is);
  latent_.load(is);
  collection_.load(is);
  meta_.load(is);
}

}  // namespace entroplan
