#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hmmres/hmm.hpp"
#include "hmmres/kernels.hpp"
#include "oracles.hpp"

using namespace hmmres;

namespace {

AlphabetPtr ab2() { return Alphabet::indexed(2); }
Distribution d2(double p) { return Distribution(ab2(), {p, 1.0 - p}); }

Sequence random_x(Rng& rng, std::size_t len, std::size_t nx) {
  Sequence x(len);
  for (auto& s : x) s = static_cast<Symbol>(rng.uniform_int(0, nx - 1));
  return x;
}

PairMeasure random_pair_measure(Rng& rng, std::size_t k, const AlphabetPtr& alphabet) {
  const std::size_t s = k * alphabet->size();
  const auto flat = oracle::random_positive(s * s, rng, 1e-3 / static_cast<double>(s * s));
  Matrix m(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s));
  for (std::size_t i = 0; i < s * s; ++i) m(static_cast<Eigen::Index>(i / s), static_cast<Eigen::Index>(i % s)) = flat[i];
  return PairMeasure(k, alphabet, m);
}

}  // namespace

TEST_CASE("hmm invariants") {
  Matrix p(2, 2);
  p << 0.5, 0.5, 0.2, 0.7;
  CHECK_THROWS_AS(Hmm(p, std::vector<Distribution>{d2(0.5), d2(0.5)}), std::invalid_argument);
  p << 0.5, 0.5, 0.3, 0.7;
  CHECK_NOTHROW(Hmm(p, std::vector<Distribution>{d2(0.5), d2(0.5)}));
  CHECK_THROWS_AS(Hmm(p, std::vector<Distribution>{d2(0.5)}), std::invalid_argument);
  CHECK_THROWS_AS(validate_initial(std::vector<double>{0.5, 0.4}, 2), std::invalid_argument);
}

TEST_CASE("log likelihood examples") {
  Matrix one(1, 1);
  one << 1.0;
  const Hmm uniform(one, std::vector<Distribution>{Distribution::uniform(ab2())});
  Rng rng(1);
  for (std::size_t len : {1u, 2u, 7u, 100u}) {
    const auto x = random_x(rng, len, 2);
    CHECK(log_likelihood(x, uniform, uniform_initial(1)) == doctest::Approx(-1.0).epsilon(1e-15));
    if (len <= 20) CHECK(brute_force_likelihood(x, uniform, uniform_initial(1)) == doctest::Approx(-1.0).epsilon(1e-15));
  }
  const Hmm point(one, std::vector<Distribution>{Distribution::point_mass(ab2(), 0)});
  CHECK(log_likelihood(Sequence{0, 1}, point, uniform_initial(1)) == -kInfinity);
  CHECK(brute_force_likelihood(Sequence{0, 1}, point, uniform_initial(1)) == -kInfinity);
}

TEST_CASE("single path and two path examples") {
  // Deterministic chain with a point-mass start: one path carries all mass.
  Matrix cycle(2, 2);
  cycle << 0.0, 1.0, 1.0, 0.0;
  const Hmm det(cycle, std::vector<Distribution>{d2(0.9), d2(0.3)});
  const auto pi = point_initial(2, 0);
  const Sequence x = {0, 1, 1, 0, 0};
  const std::vector<std::size_t> path = {0, 1, 0, 1, 0};
  const double n = static_cast<double>(x.size() - 1);
  const double forward = log_likelihood(x, det, pi);
  CHECK(single_path_loglik(x, det, pi, path) * n / (n + 1) == doctest::Approx(forward).epsilon(1e-13));
  CHECK(brute_force_likelihood(x, det, pi) == doctest::Approx(forward).epsilon(1e-13));

  // Two equally likely paths with equal emissions: one extra bit in total.
  Matrix stay(2, 2);
  stay << 1.0, 0.0, 0.0, 1.0;
  const Hmm twin(stay, std::vector<Distribution>{d2(0.7), d2(0.7)});
  const auto half = uniform_initial(2);
  const double two = log_likelihood(x, twin, half);
  const double single = single_path_loglik(x, twin, half, std::vector<std::size_t>(x.size(), 0)) * n / (n + 1);
  CHECK(two == doctest::Approx(single + 1.0 / (n + 1)).epsilon(1e-13));
  CHECK(single_path_loglik(x, twin, half, std::vector<std::size_t>{0, 1, 0, 0, 0}) == -kInfinity);
}

TEST_CASE("forward recursion agrees with path enumeration") {
  Rng rng(2718);
  double worst = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t k = 1 + rng.uniform_int(0, 2);
    const std::size_t nx = 2 + rng.uniform_int(0, 1);
    const std::size_t len = 1 + rng.uniform_int(0, 8);
    auto alphabet = Alphabet::indexed(nx);
    const Hmm h = oracle::random_hmm(k, alphabet, rng);
    const auto pi = random_simplex_point(k, rng);
    const auto x = random_x(rng, len, nx);
    const double forward = log_likelihood(x, h, pi);
    const auto exact = oracle::path_enumeration(x, h, pi);
    const double reference = static_cast<double>(std::log2(exact) / static_cast<long double>(len));
    worst = std::max(worst, std::abs(forward - reference) / std::abs(reference));
    CHECK(std::abs(brute_force_likelihood(x, h, pi) - reference) <= 1e-9 * std::abs(reference));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("brute force guard") {
  Matrix p = Matrix::Constant(4, 4, 0.25);
  const Hmm h(p, std::vector<Distribution>(4, d2(0.5)));
  CHECK_THROWS_AS(brute_force_likelihood(Sequence(12, 0), h, uniform_initial(4)), std::length_error);
}

TEST_CASE("reference hmm") {
  const auto [h, pi] = reference_hmm(std::vector<Distribution>{d2(0.9), d2(0.1)}, 5);
  CHECK(h.p(0, 0) == doctest::Approx(0.8));
  CHECK(h.p(0, 1) == doctest::Approx(0.2));
  CHECK(h.p(1, 0) == doctest::Approx(0.2));
  CHECK(pi == uniform_initial(2));
  const auto [single, single_pi] = reference_hmm(std::vector<Distribution>{d2(0.9)}, 7);
  CHECK(single.p(0, 0) == 1.0);
  for (std::size_t k = 1; k <= 5; ++k)
    for (std::size_t m = 3; m <= 40; m += 7) {
      const auto [r, r_pi] = reference_hmm(std::vector<Distribution>(k, d2(0.4)), m);
      CHECK((r.transition().rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
    }
  CHECK_THROWS_AS(reference_hmm(std::vector<Distribution>{d2(0.9)}, 2), std::invalid_argument);
}

TEST_CASE("true path under the reference hmm") {
  // Transition term of the true path: at most N/m switches, each costing
  // log2((k-1) m), stays costing -log2(1 - 1/m).
  Rng rng(5);
  for (std::size_t m : {5u, 10u, 20u}) {
    ScheduleSpec spec;
    spec.kind = ScheduleKind::random_length;
    spec.min_length = m;
    spec.max_length = 3 * m;
    spec.horizon = 400;
    const std::vector<Distribution> sources = {d2(0.9), d2(0.5), d2(0.2)};
    const auto model = build_schedule(spec, sources, m, rng);
    const auto [h, ignored] = reference_hmm(sources, m);
    const auto s = sample(model, 400, rng);
    const double n = 399;
    double transitions = 0;
    for (std::size_t i = 0; i + 1 < s.kappa.size(); ++i) transitions += std::log2(h.p(s.kappa[i], s.kappa[i + 1]));
    CHECK(transitions / n >= -std::log2(2.0 * 3.0 * static_cast<double>(m)) / static_cast<double>(m));
  }
}

TEST_CASE("single path never exceeds the forward likelihood") {
  Rng rng(12);
  for (int t = 0; t < 300; ++t) {
    const std::size_t k = 1 + rng.uniform_int(0, 2);
    auto alphabet = Alphabet::indexed(2 + rng.uniform_int(0, 2));
    const Hmm h = oracle::random_hmm(k, alphabet, rng);
    const auto pi = random_simplex_point(k, rng);
    const auto x = random_x(rng, 2 + rng.uniform_int(0, 30), alphabet->size());
    std::vector<std::size_t> path(x.size());
    for (auto& s : path) s = rng.uniform_int(0, k - 1);
    const double n = static_cast<double>(x.size() - 1);
    CHECK(single_path_loglik(x, h, pi, path) * n / (n + 1) <= log_likelihood(x, h, pi) + 1e-12);
  }
}

TEST_CASE("unfolded chain") {
  Matrix one(1, 1);
  one << 1.0;
  const auto nu = d2(0.3);
  const auto u1 = unfold(Hmm(one, std::vector<Distribution>{nu}));
  CHECK(u1.transition(0, 0) == doctest::Approx(0.3));
  CHECK(u1.transition(1, 0) == doctest::Approx(0.3));
  CHECK(u1.transition(1, 1) == doctest::Approx(0.7));

  Rng rng(3);
  for (int t = 0; t < 30; ++t) {
    const std::size_t k = 1 + rng.uniform_int(0, 2);
    const std::size_t nx = 2 + rng.uniform_int(0, 1);
    auto alphabet = Alphabet::indexed(nx);
    const Hmm h = oracle::random_hmm(k, alphabet, rng);
    const auto pi = random_simplex_point(k, rng);
    const auto chain = unfold(h);
    CHECK((chain.transition.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
    // Law of length-3 data sequences from the unfolded walk equals the HMM law.
    const auto init = chain.initial(h, pi);
    for (Symbol a = 0; a < nx; ++a)
      for (Symbol b = 0; b < nx; ++b)
        for (Symbol c = 0; c < nx; ++c) {
          long double walk = 0;
          for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j)
              for (std::size_t l = 0; l < k; ++l) {
                const auto u = chain.index(i, a), v = chain.index(j, b), w = chain.index(l, c);
                walk += init[u] * chain.transition(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) *
                        chain.transition(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(w));
              }
          const Sequence x = {a, b, c};
          CHECK(std::abs(static_cast<double>(walk - oracle::path_enumeration(x, h, pi))) <= 1e-15);
        }
  }
}

TEST_CASE("path moments and the projection T") {
  auto alphabet = ab2();
  const std::vector<std::size_t> constant(6, 3);
  const auto pm = path_second_moment(constant, 2, alphabet);
  CHECK(pm.matrix()(3, 3) == 1.0);
  CHECK(pm.stationary());
  const std::vector<std::size_t> alternating = {0, 1, 0, 1, 0};
  const auto alt = path_second_moment(alternating, 2, alphabet);
  CHECK(alt.matrix()(0, 1) == 0.5);
  CHECK(alt.matrix()(1, 0) == 0.5);
  CHECK_THROWS_AS(path_second_moment(std::vector<std::size_t>{1}, 2, alphabet), std::invalid_argument);

  Matrix point = Matrix::Zero(4, 4);
  point(3, 0) = 1.0;  // ((1, b), (0, a))
  const auto t = project_T(PairMeasure(2, alphabet, point));
  CHECK(t(1, 0) == 1.0);

  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 1 + rng.uniform_int(0, 3);
    const std::size_t nx = 2 + rng.uniform_int(0, 3);
    auto ab = Alphabet::indexed(nx);
    std::vector<std::size_t> path(2 + rng.uniform_int(0, 200));
    Sequence data(path.size());
    for (std::size_t i = 0; i < path.size(); ++i) {
      path[i] = rng.uniform_int(0, k * nx - 1);
      data[i] = static_cast<Symbol>(path[i] % nx);
    }
    const auto moment = path_second_moment(path, k, ab);
    CHECK((project_T(moment).matrix() - empirical_moment(data, ab).matrix()).cwiseAbs().maxCoeff() <= 1e-14);
    if (k == 1) CHECK(project_T(moment).matrix() == moment.matrix());

    // Counting oracle on S' pairs.
    std::map<std::pair<std::size_t, std::size_t>, int> counts;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) ++counts[{path[i], path[i + 1]}];
    double diff = 0;
    for (const auto& [uv, c] : counts)
      diff = std::max(diff, std::abs(moment.matrix()(static_cast<Eigen::Index>(uv.first), static_cast<Eigen::Index>(uv.second)) -
                                     c / static_cast<double>(path.size() - 1)));
    CHECK(diff <= 1e-15);
  }
}

TEST_CASE("markov divergence") {
  Rng rng(23);
  for (int t = 0; t < 100; ++t) {
    const std::size_t k = 1 + rng.uniform_int(0, 2);
    auto alphabet = Alphabet::indexed(2 + rng.uniform_int(0, 1));
    const Hmm h = oracle::random_hmm(k, alphabet, rng, 0.01);
    const auto chain = unfold(h);
    const auto m = random_pair_measure(rng, k, alphabet);

    // Direct formula oracle.
    const Vector bar = m.left_marginal();
    long double direct = 0;
    for (Eigen::Index u = 0; u < m.matrix().rows(); ++u)
      for (Eigen::Index v = 0; v < m.matrix().cols(); ++v) {
        const long double muv = m.matrix()(u, v);
        direct += muv * std::log2(muv / (static_cast<long double>(bar(u)) * chain.transition(u, v)));
      }
    CHECK(std::abs(markov_divergence(m, chain) - static_cast<double>(direct)) <= 1e-10);
    CHECK(markov_divergence(m, chain) >= 0.0);

    // Matched kernel: M(u, v) = Mbar(u) p'(u, v).
    Matrix matched = bar.asDiagonal() * chain.transition;
    CHECK(std::abs(markov_divergence(PairMeasure(k, alphabet, matched), chain)) <= 1e-12);
  }
  Matrix stay(2, 2);
  stay << 1.0, 0.0, 0.0, 1.0;
  const auto chain = unfold(Hmm(stay, std::vector<Distribution>{d2(0.5), d2(0.5)}));
  Matrix hit = Matrix::Zero(4, 4);
  hit(0, 2) = 1.0;  // state 0 to state 1 has p = 0
  CHECK(markov_divergence(PairMeasure(2, ab2(), hit), chain) == kInfinity);
}

TEST_CASE("T does not increase relative entropy") {
  Rng rng(1000);
  int violations = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t k = 1 + rng.uniform_int(0, 2);
    auto alphabet = Alphabet::indexed(2 + rng.uniform_int(0, 2));
    const auto m1 = random_pair_measure(rng, k, alphabet);
    const auto m2 = random_pair_measure(rng, k, alphabet);
    if (kl_divergence(project_T(m1), project_T(m2)) > kl_divergence(m1, m2) + 1e-10) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("serial and OpenMP kernels agree") {
  Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    const std::size_t k = 1 + rng.uniform_int(0, 2);
    const std::size_t nx = 2 + rng.uniform_int(0, 1);
    auto alphabet = Alphabet::indexed(nx);
    const Hmm h = oracle::random_hmm(k, alphabet, rng);
    const auto pi = random_simplex_point(k, rng);
    const auto x = random_x(rng, 1 + rng.uniform_int(0, 7), nx);
    const double a = kernels::serial::path_sum(x, h, pi);
    const double b = kernels::omp::path_sum(x, h, pi);
    CHECK(std::abs(a - b) <= 1e-14 * a);
    CHECK(std::abs(a - static_cast<double>(oracle::path_enumeration(x, h, pi))) <= 1e-13 * a);

    const kernels::PairCountPredicate accept = [](std::span<const long long> c) { return c[0] % 2 == 0; };
    const std::size_t len = 2 + rng.uniform_int(0, 3);
    const auto sp = kernels::serial::set_probability(h, pi, len, accept);
    const auto op = kernels::omp::set_probability(h, pi, len, accept);
    CHECK(std::abs(sp.accepted - op.accepted) <= 1e-14);
    CHECK(std::abs(sp.total - 1.0) <= 1e-12);
    CHECK(std::abs(op.total - 1.0) <= 1e-12);

    std::vector<Sequence> xs;
    for (int i = 0; i < 5; ++i) xs.push_back(random_x(rng, 50, nx));
    CHECK(kernels::serial::log_likelihood_batch(xs, h, pi) == kernels::omp::log_likelihood_batch(xs, h, pi));
  }

  std::vector<int> out(100, 0);
  kernels::parallel_for(out.size(), 0, [&](std::size_t i) { out[i] = static_cast<int>(i) * 2; });
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i) * 2);
  CHECK_THROWS_AS(kernels::parallel_for(10, 0,
                                        [](std::size_t i) {
                                          if (i == 3) throw std::runtime_error("boom");
                                        }),
                  std::runtime_error);
}

TEST_CASE("set probability against enumeration of symbol sequences") {
  Rng rng(41);
  for (int t = 0; t < 10; ++t) {
    const std::size_t k = 1 + rng.uniform_int(0, 1);
    auto alphabet = ab2();
    const Hmm h = oracle::random_hmm(k, alphabet, rng);
    const auto pi = random_simplex_point(k, rng);
    const std::size_t len = 3 + rng.uniform_int(0, 3);
    Matrix target = Matrix::Constant(2, 2, 0.25);
    const double radius = 0.8;
    const kernels::PairCountPredicate accept = [&](std::span<const long long> c) {
      double tv = 0;
      for (int i = 0; i < 4; ++i) tv += std::abs(static_cast<double>(c[i]) / static_cast<double>(len - 1) - 0.25);
      return tv <= radius + 1e-12;
    };
    const auto lib = kernels::omp::set_probability(h, pi, len, accept);
    CHECK(std::abs(lib.accepted - static_cast<double>(oracle::set_probability(h, pi, len, target, radius))) <= 1e-13);
  }
}
