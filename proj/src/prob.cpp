#include "hmmres/prob.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace hmmres {

Alphabet::Alphabet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.size() < 2) throw std::invalid_argument("alphabet needs at least 2 symbols");
  std::unordered_set<std::string> seen(symbols_.begin(), symbols_.end());
  if (seen.size() != symbols_.size()) throw std::invalid_argument("alphabet symbols must be distinct");
}

std::shared_ptr<const Alphabet> Alphabet::indexed(std::size_t n) {
  std::vector<std::string> names;
  names.reserve(n);
  for (std::size_t i = 0; i < n; ++i) names.push_back(std::to_string(i));
  return std::make_shared<const Alphabet>(std::move(names));
}

Symbol Alphabet::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < symbols_.size(); ++i)
    if (symbols_[i] == name) return static_cast<Symbol>(i);
  throw std::invalid_argument("unknown symbol '" + name + "'");
}

void require_same_alphabet(const AlphabetPtr& a, const AlphabetPtr& b) {
  if (a == b) return;
  if (!a || !b || !(*a == *b)) throw std::invalid_argument("alphabet mismatch");
}

Distribution::Distribution(AlphabetPtr alphabet, std::vector<double> probs)
    : alphabet_(std::move(alphabet)), probs_(std::move(probs)) {
  if (!alphabet_) throw std::invalid_argument("distribution without alphabet");
  if (probs_.size() != alphabet_->size())
    throw std::invalid_argument("distribution length does not match alphabet");
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0)) throw std::invalid_argument("distribution entries must be nonnegative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTolerance)
    throw std::invalid_argument("distribution entries must sum to 1");
}

Distribution Distribution::uniform(AlphabetPtr alphabet) {
  const std::size_t n = alphabet->size();
  return {std::move(alphabet), std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

Distribution Distribution::point_mass(AlphabetPtr alphabet, Symbol s) {
  std::vector<double> p(alphabet->size(), 0.0);
  p.at(s) = 1.0;
  return {std::move(alphabet), std::move(p)};
}

Distribution Distribution::normalized(AlphabetPtr alphabet, std::vector<double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("weights must be nonnegative");
    sum += w;
  }
  if (!(sum > 0.0)) throw std::invalid_argument("weights sum to zero");
  for (double& w : weights) w /= sum;
  return {std::move(alphabet), std::move(weights)};
}

std::uint64_t Rng::uniform_int(std::uint64_t lo, std::uint64_t hi) {
  if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
  const std::uint64_t span = hi - lo + 1;
  if (span == 0) return engine_();  // full 64-bit range
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t r;
  do r = engine_();
  while (r >= limit);
  return lo + r % span;
}

double entropy(std::span<const double> mu) {
  double h = 0.0;
  for (double p : mu)
    if (p > 0.0) h -= p * std::log2(p);
  return h;
}

double entropy(const Distribution& mu) { return entropy(mu.probs()); }

double kl_divergence(std::span<const double> nu, std::span<const double> mu) {
  if (nu.size() != mu.size()) throw std::invalid_argument("kl_divergence: size mismatch");
  double d = 0.0;
  for (std::size_t a = 0; a < nu.size(); ++a) {
    if (nu[a] <= 0.0) continue;
    if (mu[a] <= 0.0) return kInfinity;
    d += nu[a] * std::log2(nu[a] / mu[a]);
  }
  // Rounding can leave tiny negatives when nu == mu.
  return d < 0.0 ? 0.0 : d;
}

double kl_divergence(const Distribution& nu, const Distribution& mu) {
  require_same_alphabet(nu.alphabet(), mu.alphabet());
  return kl_divergence(nu.probs(), mu.probs());
}

double tv_distance(std::span<const double> mu, std::span<const double> nu) {
  if (nu.size() != mu.size()) throw std::invalid_argument("tv_distance: size mismatch");
  double d = 0.0;
  for (std::size_t a = 0; a < mu.size(); ++a) d += std::abs(mu[a] - nu[a]);
  return d;
}

double tv_distance(const Distribution& mu, const Distribution& nu) {
  require_same_alphabet(mu.alphabet(), nu.alphabet());
  return tv_distance(mu.probs(), nu.probs());
}

Symbol sample_categorical(std::span<const double> mu, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  Symbol last_positive = 0;
  for (std::size_t a = 0; a < mu.size(); ++a) {
    if (mu[a] <= 0.0) continue;
    last_positive = static_cast<Symbol>(a);
    cum += mu[a];
    if (u < cum) return last_positive;
  }
  // u landed in the rounding gap above the cumulative sum.
  return last_positive;
}

Symbol sample_categorical(const Distribution& mu, Rng& rng) { return sample_categorical(mu.probs(), rng); }

std::vector<double> random_simplex_point(std::size_t n, Rng& rng) {
  std::vector<double> w(n);
  double sum = 0.0;
  for (double& x : w) {
    // 1 - u lies in (0, 1], so the log is finite.
    x = -std::log(1.0 - rng.uniform());
    sum += x;
  }
  if (sum <= 0.0) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(n));
    return w;
  }
  for (double& x : w) x /= sum;
  return w;
}

}  // namespace hmmres
