#include "hmmres/kernels.hpp"

#include <cmath>
#include <exception>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hmmres::kernels {

namespace {

// Advances a base-`radix` odometer; false once it wraps to all zeros.
bool advance(std::vector<std::size_t>& digits, std::size_t radix) {
  for (std::size_t i = digits.size(); i-- > 0;) {
    if (++digits[i] < radix) return true;
    digits[i] = 0;
  }
  return false;
}

std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) r *= base;
  return r;
}

// Sum over completions of a state path whose position t-1 is `prev` and whose
// prefix already carries probability `prob`.
double path_sum_from(std::span<const Symbol> x, const Hmm& h, std::size_t t, std::size_t prev, double prob) {
  if (prob == 0.0) return 0.0;
  if (t == x.size()) return prob;
  double total = 0.0;
  for (std::size_t j = 0; j < h.k(); ++j)
    total += path_sum_from(x, h, t + 1, j, prob * h.p(prev, j) * h.nu(j, x[t]));
  return total;
}

struct Enumerator {
  const UnfoldedChain& chain;
  const std::vector<double>& init;
  std::size_t length;
  const PairCountPredicate& accept;
  std::size_t n_symbols;

  void run(std::size_t t, std::size_t prev, double prob, std::vector<long long>& counts, SetProbability& out) const {
    if (t == length) {
      out.total += prob;
      if (accept(counts)) out.accepted += prob;
      return;
    }
    const Symbol a = chain.symbol_of(prev);
    for (std::size_t v = 0; v < chain.size(); ++v) {
      const double step = chain.transition(static_cast<Eigen::Index>(prev), static_cast<Eigen::Index>(v));
      if (step == 0.0) continue;
      const std::size_t cell = a * n_symbols + chain.symbol_of(v);
      ++counts[cell];
      run(t + 1, v, prob * step, counts, out);
      --counts[cell];
    }
  }
};

void require_length(std::size_t length) {
  if (length < 2) throw std::invalid_argument("set_probability needs paths of length >= 2");
}

}  // namespace

namespace serial {

double path_sum(std::span<const Symbol> x, const Hmm& h, std::span<const double> pi) {
  const std::size_t k = h.k();
  std::vector<std::size_t> path(x.size(), 0);
  double total = 0.0;
  do {
    double prob = pi[path[0]] * h.nu(path[0], x[0]);
    for (std::size_t i = 1; i < x.size(); ++i) prob *= h.p(path[i - 1], path[i]) * h.nu(path[i], x[i]);
    total += prob;
  } while (advance(path, k));
  return total;
}

SetProbability set_probability(const Hmm& h, std::span<const double> pi, std::size_t length,
                               const PairCountPredicate& accept) {
  require_length(length);
  const UnfoldedChain chain = unfold(h);
  const std::vector<double> init = chain.initial(h, pi);
  const std::size_t n = h.alphabet_size();
  std::vector<std::size_t> path(length, 0);
  std::vector<long long> counts(n * n);
  SetProbability out;
  do {
    double prob = init[path[0]];
    for (std::size_t i = 1; i < length; ++i)
      prob *= chain.transition(static_cast<Eigen::Index>(path[i - 1]), static_cast<Eigen::Index>(path[i]));
    if (prob == 0.0) continue;
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i + 1 < length; ++i) ++counts[chain.symbol_of(path[i]) * n + chain.symbol_of(path[i + 1])];
    out.total += prob;
    if (accept(counts)) out.accepted += prob;
  } while (advance(path, chain.size()));
  return out;
}

std::vector<double> log_likelihood_batch(std::span<const Sequence> xs, const Hmm& h, std::span<const double> pi) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(log_likelihood(x, h, pi));
  return out;
}

}  // namespace serial

namespace omp {

double path_sum(std::span<const Symbol> x, const Hmm& h, std::span<const double> pi) {
  const std::size_t k = h.k();
  const std::size_t depth = std::min<std::size_t>(x.size(), 2);
  const std::size_t chunks = ipow(k, depth);
  std::vector<double> partial(chunks, 0.0);
  parallel_for(chunks, 0, [&](std::size_t c) {
    // Decode the fixed prefix s_0 (, s_1) of this chunk.
    const std::size_t s0 = depth == 2 ? c / k : c;
    double prob = pi[s0] * h.nu(s0, x[0]);
    std::size_t last = s0;
    if (depth == 2) {
      const std::size_t s1 = c % k;
      prob *= h.p(s0, s1) * h.nu(s1, x[1]);
      last = s1;
    }
    partial[c] = path_sum_from(x, h, depth, last, prob);
  });
  double total = 0.0;
  for (double v : partial) total += v;
  return total;
}

SetProbability set_probability(const Hmm& h, std::span<const double> pi, std::size_t length,
                               const PairCountPredicate& accept) {
  require_length(length);
  const UnfoldedChain chain = unfold(h);
  const std::vector<double> init = chain.initial(h, pi);
  const std::size_t n = h.alphabet_size();
  const Enumerator e{chain, init, length, accept, n};
  std::vector<SetProbability> partial(chain.size());
  parallel_for(chain.size(), 0, [&](std::size_t u0) {
    if (init[u0] == 0.0) return;
    std::vector<long long> counts(n * n, 0);
    e.run(1, u0, init[u0], counts, partial[u0]);
  });
  SetProbability out;
  for (const auto& p : partial) {
    out.total += p.total;
    out.accepted += p.accepted;
  }
  return out;
}

std::vector<double> log_likelihood_batch(std::span<const Sequence> xs, const Hmm& h, std::span<const double> pi) {
  std::vector<double> out(xs.size());
  parallel_for(xs.size(), 0, [&](std::size_t i) { out[i] = log_likelihood(xs[i], h, pi); });
  return out;
}

}  // namespace omp

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
  // Exceptions cannot leave an OpenMP region; keep the one from the lowest
  // index and rethrow it after the loop.
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
#ifdef _OPENMP
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
#else
  (void)jobs;
#endif
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace hmmres::kernels
