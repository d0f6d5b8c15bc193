#pragma once

// Finite-alphabet probability primitives.
//
// Conventions used across the library:
//   * every logarithm is base 2, so entropies and divergences are in bits;
//   * 0 * log 0 == 0;
//   * total variation is the un-halved L1 sum, sum_a |mu(a) - nu(a)|, which
//     lies in [0, 2]. This is twice the "usual" TV distance.

#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace hmmres {

using Symbol = std::uint32_t;
using Sequence = std::vector<Symbol>;

/// Extended-real sentinel for divergences and log-likelihoods that are
/// infinite by definition (support violations). Never produced by overflow.
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

inline bool is_infinite(double v) { return v == kInfinity || v == -kInfinity; }

/// Ordered set of distinct symbol names. The order is the index order used by
/// every vector and matrix in the library.
class Alphabet {
 public:
  explicit Alphabet(std::vector<std::string> symbols);

  /// Alphabet with symbols "0", "1", ..., "n-1".
  static std::shared_ptr<const Alphabet> indexed(std::size_t n);

  std::size_t size() const { return symbols_.size(); }
  const std::string& name(Symbol s) const { return symbols_.at(s); }
  const std::vector<std::string>& symbols() const { return symbols_; }
  /// Throws std::invalid_argument for unknown names.
  Symbol index_of(const std::string& name) const;

  bool operator==(const Alphabet& other) const = default;

 private:
  std::vector<std::string> symbols_;
};

using AlphabetPtr = std::shared_ptr<const Alphabet>;

/// Throws std::invalid_argument unless both alphabets have the same symbols.
void require_same_alphabet(const AlphabetPtr& a, const AlphabetPtr& b);

/// Probability vector over an alphabet. Entries are nonnegative and sum to 1
/// within 1e-12; the constructor enforces this.
class Distribution {
 public:
  static constexpr double kSumTolerance = 1e-12;

  Distribution(AlphabetPtr alphabet, std::vector<double> probs);

  static Distribution uniform(AlphabetPtr alphabet);
  static Distribution point_mass(AlphabetPtr alphabet, Symbol s);
  /// Divides by the sum first; throws if the weights are negative or all zero.
  static Distribution normalized(AlphabetPtr alphabet, std::vector<double> weights);

  const AlphabetPtr& alphabet() const { return alphabet_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](Symbol s) const { return probs_[s]; }
  std::span<const double> probs() const { return probs_; }

  bool operator==(const Distribution& other) const {
    return *alphabet_ == *other.alphabet_ && probs_ == other.probs_;
  }

 private:
  AlphabetPtr alphabet_;
  std::vector<double> probs_;
};

/// Deterministic 64-bit generator (std::mt19937_64, whose output sequence is
/// fixed by the C++ standard). Uniform variates are built from the raw bits so
/// streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [lo, hi].
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);
  /// Independent stream for sub-task `index`: seed XOR index.
  Rng derive(std::uint64_t index) const { return Rng(seed_ ^ index); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// H(mu) = -sum mu(a) log2 mu(a).
double entropy(const Distribution& mu);
double entropy(std::span<const double> mu);

/// D(nu | mu) in bits; kInfinity when nu charges a zero of mu.
double kl_divergence(const Distribution& nu, const Distribution& mu);
double kl_divergence(std::span<const double> nu, std::span<const double> mu);

/// Un-halved L1 distance, in [0, 2] for distributions.
double tv_distance(const Distribution& mu, const Distribution& nu);
double tv_distance(std::span<const double> mu, std::span<const double> nu);

Symbol sample_categorical(const Distribution& mu, Rng& rng);
Symbol sample_categorical(std::span<const double> mu, Rng& rng);

/// Symmetric Dirichlet(1) draw of length n (normalized exponentials).
std::vector<double> random_simplex_point(std::size_t n, Rng& rng);

}  // namespace hmmres
