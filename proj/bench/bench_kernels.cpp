// Serial versus OpenMP kernels. Run with OMP_NUM_THREADS set to compare.

#include <cmath>

#include <benchmark/benchmark.h>

#include "hmmres/estimation.hpp"
#include "hmmres/kernels.hpp"

namespace {

using namespace hmmres;

Hmm random_hmm(std::size_t k, std::size_t nx, std::uint64_t seed) {
  Rng rng(seed);
  const HDeltaSpec spec{0.01, k, Alphabet::indexed(nx)};
  return random_initial_hmm(spec, 5.0, rng);
}

Sequence random_sequence(std::size_t len, std::size_t nx, std::uint64_t seed) {
  Rng rng(seed);
  Sequence x(len);
  for (auto& s : x) s = static_cast<Symbol>(rng.uniform_int(0, nx - 1));
  return x;
}

template <bool Parallel>
void path_sum(benchmark::State& state) {
  const auto len = static_cast<std::size_t>(state.range(0));
  const Hmm h = random_hmm(3, 3, 1);
  const auto pi = uniform_initial(3);
  const Sequence x = random_sequence(len, 3, 2);
  for (auto _ : state) {
    const double v = Parallel ? kernels::omp::path_sum(x, h, pi) : kernels::serial::path_sum(x, h, pi);
    benchmark::DoNotOptimize(v);
  }
  state.counters["paths"] = std::pow(3.0, static_cast<double>(len));
}

template <bool Parallel>
void set_probability(benchmark::State& state) {
  const auto len = static_cast<std::size_t>(state.range(0));
  const Hmm h = random_hmm(2, 2, 3);
  const auto pi = uniform_initial(2);
  const kernels::PairCountPredicate accept = [](std::span<const long long> c) { return c[0] >= c[3]; };
  for (auto _ : state) {
    const auto r = Parallel ? kernels::omp::set_probability(h, pi, len, accept)
                            : kernels::serial::set_probability(h, pi, len, accept);
    benchmark::DoNotOptimize(r.accepted);
  }
}

template <bool Parallel>
void loglik_batch(benchmark::State& state) {
  const auto count = static_cast<std::size_t>(state.range(0));
  const Hmm h = random_hmm(4, 6, 5);
  const auto pi = uniform_initial(4);
  std::vector<Sequence> xs;
  for (std::size_t i = 0; i < count; ++i) xs.push_back(random_sequence(2000, 6, 100 + i));
  for (auto _ : state) {
    const auto r = Parallel ? kernels::omp::log_likelihood_batch(xs, h, pi) : kernels::serial::log_likelihood_batch(xs, h, pi);
    benchmark::DoNotOptimize(r.data());
  }
}

BENCHMARK(path_sum<false>)->Arg(8)->Arg(10)->Arg(12);
BENCHMARK(path_sum<true>)->Arg(8)->Arg(10)->Arg(12);
BENCHMARK(set_probability<false>)->Arg(8)->Arg(10);
BENCHMARK(set_probability<true>)->Arg(8)->Arg(10);
BENCHMARK(loglik_batch<false>)->Arg(16)->Arg(64);
BENCHMARK(loglik_batch<true>)->Arg(16)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
