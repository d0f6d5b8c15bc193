#pragma once

// Hidden Markov models over a finite alphabet and the objects used to reason
// about them: the forward likelihood, a brute-force path-sum oracle, the
// reference HMM with persistent states, the unfolded chain on state x symbol
// pairs, pair measures on that chain and the projection T back to symbols.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "hmmres/prob.hpp"
#include "hmmres/second_moment.hpp"

namespace hmmres {

/// Initial distribution over hidden states (length k, sums to 1).
using StateWeights = std::vector<double>;

StateWeights uniform_initial(std::size_t k);
StateWeights point_initial(std::size_t k, std::size_t state);
/// Throws std::invalid_argument unless pi is a distribution on k states.
void validate_initial(std::span<const double> pi, std::size_t k);

class Hmm {
 public:
  static constexpr double kRowTolerance = 1e-12;

  /// transition: k x k row-stochastic. emission: k x |X|, row j is nu_j.
  Hmm(AlphabetPtr alphabet, Matrix transition, Matrix emission);
  Hmm(Matrix transition, std::span<const Distribution> emissions);

  std::size_t k() const { return static_cast<std::size_t>(transition_.rows()); }
  std::size_t alphabet_size() const { return static_cast<std::size_t>(emission_.cols()); }
  const AlphabetPtr& alphabet() const { return alphabet_; }
  const Matrix& transition() const { return transition_; }
  const Matrix& emission() const { return emission_; }
  double p(std::size_t i, std::size_t j) const {
    return transition_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  double nu(std::size_t j, Symbol a) const { return emission_(static_cast<Eigen::Index>(j), a); }
  Distribution emission_distribution(std::size_t j) const;

  /// Same model with states relabeled: new state perm[i] is old state i.
  Hmm permuted(std::span<const std::size_t> perm) const;

 private:
  AlphabetPtr alphabet_;
  Matrix transition_;
  Matrix emission_;
};

/// Per-symbol log-likelihood (1/|x|) log2 P_{H,pi}(x), via the scaled forward
/// recursion. For x of length N+1 this is the normalization by N+1.
/// Returns -kInfinity when every path has probability zero.
double log_likelihood(std::span<const Symbol> x, const Hmm& h, std::span<const double> pi);

/// Same quantity by explicit summation over all k^|x| state paths.
/// Throws std::length_error when k^|x| > kBruteForceLimit.
inline constexpr double kBruteForceLimit = 1e7;
double brute_force_likelihood(std::span<const Symbol> x, const Hmm& h, std::span<const double> pi);

/// The persistent HMM used as a likelihood witness: emissions are the
/// sources, p_ii = 1 - 1/m, p_ij = 1/((k-1)m) for j != i (p = [1] when k = 1),
/// pi uniform.
std::pair<Hmm, StateWeights> reference_hmm(std::span<const Distribution> sources, std::size_t m);

/// Log-probability of one state path, normalized per transition:
///   (1/N) [ log2 pi(s_0) + sum_i log2 p(s_i, s_{i+1}) + sum_i log2 nu_{s_i}(x_i) ]
/// with N = |x| - 1. Multiply by N/(N+1) to compare with log_likelihood.
/// Returns -kInfinity if the path uses a zero probability.
double single_path_loglik(std::span<const Symbol> x, const Hmm& h, std::span<const double> pi,
                          std::span<const std::size_t> path);

/// Markov chain on S' = S x X, state (i, a) at index i*|X| + a, with
/// p'((i,a),(j,b)) = p_ij nu_j(b).
struct UnfoldedChain {
  std::size_t k = 0;
  AlphabetPtr alphabet;
  Matrix transition;

  std::size_t size() const { return static_cast<std::size_t>(transition.rows()); }
  std::size_t index(std::size_t state, Symbol a) const { return state * alphabet->size() + a; }
  std::size_t state_of(std::size_t u) const { return u / alphabet->size(); }
  Symbol symbol_of(std::size_t u) const { return static_cast<Symbol>(u % alphabet->size()); }
  /// Initial law of the first pair: pi(i) nu_i(a).
  std::vector<double> initial(const Hmm& h, std::span<const double> pi) const;
};

UnfoldedChain unfold(const Hmm& h);

/// Probability measure on S' x S' for an unfolded chain with k states.
class PairMeasure {
 public:
  static constexpr double kStationaryTolerance = 1e-10;

  PairMeasure(std::size_t k, AlphabetPtr alphabet, Matrix matrix);

  std::size_t k() const { return k_; }
  const AlphabetPtr& alphabet() const { return alphabet_; }
  const Matrix& matrix() const { return matrix_; }
  /// Left and right marginals agree within 1e-10.
  bool stationary() const { return stationary_; }
  Vector left_marginal() const { return matrix_.rowwise().sum(); }
  Vector right_marginal() const { return matrix_.colwise().sum().transpose(); }

 private:
  std::size_t k_;
  AlphabetPtr alphabet_;
  Matrix matrix_;
  bool stationary_;
};

/// Pair frequencies of a path u_0..u_N in S' (indices as in UnfoldedChain).
PairMeasure path_second_moment(std::span<const std::size_t> path, std::size_t k, const AlphabetPtr& alphabet);

/// T(M')(a, b) = sum_{i,j} M'((i,a),(j,b)).
SecondMoment project_T(const PairMeasure& mp);

/// D(M | p') = sum M(u,v) log2( M(u,v) / (Mbar(u) p'_uv) ) = KL(M | z),
/// z(u,v) = Mbar(u) p'_uv. kInfinity when M charges a zero of p'.
double markov_divergence(const PairMeasure& m, const UnfoldedChain& chain);

/// KL divergence between two pair measures (flattened).
double kl_divergence(const PairMeasure& a, const PairMeasure& b);
double kl_divergence(const SecondMoment& a, const SecondMoment& b);

}  // namespace hmmres
