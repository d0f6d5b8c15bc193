#pragma once

// Data-parallel kernels. Each kernel has a straightforward serial reference in
// `kernels::serial` and an OpenMP version in `kernels::omp`. The OpenMP
// versions split the work into a fixed set of chunks and reduce the chunk
// results in chunk order, so their output does not depend on the thread count.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "hmmres/hmm.hpp"

namespace hmmres::kernels {

/// Predicate on the data pair counts of an enumerated path, row-major
/// |X| x |X|. Must be safe to call concurrently.
using PairCountPredicate = std::function<bool(std::span<const long long>)>;

/// Sum of path probabilities of the unfolded chain over all paths of `length`
/// pairs (state, symbol) whose data component satisfies `accept`.
struct SetProbability {
  double accepted = 0.0;
  double total = 0.0;  // should be 1 up to rounding
};

namespace serial {

/// sum over all state paths s of pi(s_0) prod p(s_i,s_{i+1}) prod nu_{s_i}(x_i).
double path_sum(std::span<const Symbol> x, const Hmm& h, std::span<const double> pi);

SetProbability set_probability(const Hmm& h, std::span<const double> pi, std::size_t length,
                               const PairCountPredicate& accept);

std::vector<double> log_likelihood_batch(std::span<const Sequence> xs, const Hmm& h, std::span<const double> pi);

}  // namespace serial

namespace omp {

double path_sum(std::span<const Symbol> x, const Hmm& h, std::span<const double> pi);

SetProbability set_probability(const Hmm& h, std::span<const double> pi, std::size_t length,
                               const PairCountPredicate& accept);

std::vector<double> log_likelihood_batch(std::span<const Sequence> xs, const Hmm& h, std::span<const double> pi);

}  // namespace omp

/// Runs body(i) for i in [0, n) with up to `jobs` threads (0 = OpenMP
/// default). Iterations must write only to their own output slots.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body);

/// Number of threads OpenMP would use by default (1 without OpenMP).
int max_threads();

}  // namespace hmmres::kernels
