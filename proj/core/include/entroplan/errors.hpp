#pragma once

#include <stdexcept>
#include <string>

namespace entroplan {

// Distribution shapes (G, K) disagree between operands.
struct ShapeMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// KL(q || p) with q_k > 0 where p_k = 0.
struct UndefinedKL : std::domain_error {
  using std::domain_error::domain_error;
};

// Plan selection over an empty candidate set.
struct EmptyCandidates : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A training loss or parameter became NaN/Inf; carries the offending term.
struct NonFiniteLoss : std::runtime_error {
  explicit NonFiniteLoss(const std::string& term)
      : std::runtime_error("non-finite loss term: " + term), term_name(term) {}
  std::string term_name;
};

// Meta-reward window shorter than L+1 steps without a terminal inside it.
struct ShortWindow : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Action index outside the environment's action set.
struct InvalidAction : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Bad key, value, or file in a configuration source.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Checkpoint blob written by an incompatible version.
struct VersionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Checkpoint blob failed its checksum or structural decode.
struct CorruptBlob : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Aggregation requested over zero records.
struct EmptyInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace entroplan
