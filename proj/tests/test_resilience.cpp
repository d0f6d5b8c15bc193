#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hmmres/resilience.hpp"
#include "oracles.hpp"

using namespace hmmres;

namespace {

AlphabetPtr ab2() { return Alphabet::indexed(2); }
Distribution d2(double p) { return Distribution(ab2(), {p, 1.0 - p}); }

IntervalModel fixed_model(std::vector<Distribution> sources, std::size_t m, std::size_t horizon) {
  ScheduleSpec spec;
  spec.kind = ScheduleKind::fixed_length;
  spec.length = m;
  spec.horizon = horizon;
  Rng rng(0);
  return build_schedule(spec, sources, m, rng);
}

IntervalModel random_model(Rng& rng, std::size_t k, std::size_t nx, std::size_t m, std::size_t horizon) {
  auto alphabet = Alphabet::indexed(nx);
  std::vector<Distribution> sources;
  for (std::size_t j = 0; j < k; ++j) sources.emplace_back(alphabet, oracle::random_positive(nx, rng, 0.01));
  ScheduleSpec spec;
  spec.kind = k >= 2 ? ScheduleKind::random_length : ScheduleKind::fixed_length;
  spec.length = m;
  spec.min_length = m;
  spec.max_length = 3 * m;
  spec.horizon = horizon;
  return build_schedule(spec, sources, m, rng);
}

std::vector<std::uint64_t> seeds(std::uint64_t count) {
  std::vector<std::uint64_t> s;
  for (std::uint64_t i = 1; i <= count; ++i) s.push_back(i);
  return s;
}

}  // namespace

TEST_CASE("bound constants") {
  CHECK(theorem_bound(2, 5) == doctest::Approx(0.9906453043959295).epsilon(1e-14));
  CHECK(theorem_bound(2, 10) == doctest::Approx(0.7685629834703541).epsilon(1e-14));
  CHECK(theorem_bound(2, 20) == doctest::Approx(0.5876602162648293).epsilon(1e-14));
  for (std::size_t k = 1; k <= 6; ++k)
    for (std::size_t m = 3; m < 2000; ++m) CHECK(theorem_bound(k, m + 1) < theorem_bound(k, m));

  const std::vector<Distribution> uniform = {Distribution::uniform(ab2())};
  const std::vector<double> w = {1.0};
  CHECK(lemma2_threshold(1, 7, w, uniform, 0.05) == doctest::Approx(-1.5939078460082292).epsilon(1e-14));
}

TEST_CASE("dh at the canonical system is the negative slack") {
  Rng rng(3);
  for (int t = 0; t < 40; ++t) {
    const std::size_t k = 1 + rng.uniform_int(0, 2);
    const std::size_t m = 4 + rng.uniform_int(0, 20);
    const auto model = random_model(rng, k, 2 + rng.uniform_int(0, 3), m, 300 + rng.uniform_int(0, 300));
    const std::size_t n = model.horizon() - 1;
    const auto mx = expected_moment(model, n).total;
    const Hmm h = canonical_hmm(model, n);
    const auto d = dh(mx, h, m);
    CHECK(d.status == LpStatus::optimal);
    CHECK(std::abs(d.raw + 3.0 / static_cast<double>(m)) <= 1e-8);
    CHECK(d.clamped == 0.0);
    CHECK(d.certificate <= 1e-8);
  }
}

TEST_CASE("dh on the scalar example matches a fine grid") {
  const auto mu = d2(0.9);
  Matrix one(1, 1);
  one << 1.0;
  const Hmm h(one, std::vector<Distribution>{d2(0.5)});
  const auto target = SecondMoment::product(mu, mu);
  const auto d = dh(target, h, 10);
  CHECK(std::abs(d.raw - oracle::dh_grid(target.matrix(), h, 10, 1e-5)) <= 1e-4);
  CHECK(d.clamped >= 0.0);
}

TEST_CASE("dh against the grid oracle, feasibility and invariances") {
  Rng rng(50);
  for (int t = 0; t < 50; ++t) {
    const std::size_t k = 1 + rng.uniform_int(0, 1);
    const std::size_t m = 3 + rng.uniform_int(0, 20);
    const auto model = random_model(rng, 1 + rng.uniform_int(0, 1), 2, m, 200);
    const auto mx = expected_moment(model, 199).total;
    const Hmm h = oracle::random_hmm(k, ab2(), rng, 0.01);
    const auto d = dh(mx, h, m);
    REQUIRE(d.argmin_phi.has_value());
    CHECK(std::abs(d.raw - oracle::dh_grid(mx.matrix(), h, m, 1e-3)) <= 1e-3);
    CHECK(d.raw >= -3.0 / static_cast<double>(m) - 1e-12);
    CHECK(dh_marginal_gap(mx, d.argmin_phi->matrix()) <= 3.0 / static_cast<double>(m) + 1e-8);
    CHECK(std::abs(dh_objective(mx, h, d.argmin_phi->matrix()) - d.infimum) <= 1e-8);
    CHECK(d.clamped == std::max(d.raw, 0.0));

    if (k == 2) {
      const std::vector<std::size_t> swap = {1, 0};
      CHECK(std::abs(dh(mx, h.permuted(swap), m).raw - d.raw) <= 1e-9);
    }
  }
}

TEST_CASE("dh never exceeds the objective at the canonical proper system") {
  Rng rng(61);
  for (int t = 0; t < 40; ++t) {
    const std::size_t k = 1 + rng.uniform_int(0, 2);
    const std::size_t m = 4 + rng.uniform_int(0, 10);
    const auto model = random_model(rng, k, 2 + rng.uniform_int(0, 2), m, 400);
    const auto mx = expected_moment(model, 399).total;
    const auto canon = canonical_phi(model, 399);
    const Hmm h = oracle::random_hmm(model.k(), model.alphabet(), rng, 0.01);
    CHECK(dh(mx, h, m).infimum <= dh_objective(mx, h, canon.phi.matrix()) + 1e-9);
  }
}

TEST_CASE("lemma2 check examples") {
  const auto uniform = fixed_model({Distribution::uniform(ab2())}, 7, 500);
  const auto r = lemma2_check(uniform, 500, seeds(5), 0.05);
  for (const auto& rec : r.records) {
    CHECK(rec.loglik == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(rec.pass);
  }
  CHECK(r.pass_rate == 1.0);

  // Point masses: only the true path has mass, so L is its transition term.
  const auto point = fixed_model({Distribution::point_mass(ab2(), 0), Distribution::point_mass(ab2(), 1)}, 10, 400);
  const auto p = lemma2_check(point, 400, seeds(3), 0.0);
  double transitions = 0;
  for (std::size_t i = 0; i + 1 < 400; ++i)
    transitions += point.kappa(i) == point.kappa(i + 1) ? std::log2(0.9) : std::log2(0.1);
  for (const auto& rec : p.records) {
    CHECK(rec.loglik == doctest::Approx(transitions / 400.0).epsilon(1e-12));
    CHECK(rec.threshold == doctest::Approx(-std::log2(40.0) / 10.0).epsilon(1e-12));
    CHECK(rec.pass);
  }
}

TEST_CASE("concentration check against the counting oracle") {
  const auto model = fixed_model({d2(0.9), d2(0.2)}, 5, 10);
  const std::vector<std::uint64_t> one = {42};
  const auto r = moment_concentration_check(model, 9, one);
  Rng rng(42);
  const auto s = sample(model, 10, rng);
  const Matrix empirical = oracle::hash_count_moment(s.x, 2);
  const Matrix mx = oracle::direct_expected_moment(model, 9);
  CHECK(r.records[0].tv == doctest::Approx((empirical - mx).cwiseAbs().sum()).epsilon(1e-12));
  CHECK(r.radius == doctest::Approx(0.6));

  const auto single = fixed_model({d2(0.3)}, 5, 200001);
  const auto big = moment_concentration_check(single, 200000, seeds(3));
  for (const auto& rec : big.records) CHECK(rec.tv < 0.01);
  CHECK(big.fraction_within_u == 1.0);
}

TEST_CASE("aep check exact cases") {
  const auto point = fixed_model({Distribution::point_mass(ab2(), 0), Distribution::point_mass(ab2(), 1)}, 10, 300);
  for (const auto& rec : aep_check(point, 300, seeds(3), 1e-12).records) CHECK(rec.deviation == 0.0);
  const auto uniform = fixed_model({Distribution::uniform(ab2())}, 10, 300);
  for (const auto& rec : aep_check(uniform, 300, seeds(3), 1e-12).records) {
    CHECK(std::abs(rec.deviation) <= 1e-12);
    CHECK(rec.pass);
  }
}

TEST_CASE("sanov check against sequence enumeration") {
  const auto model = fixed_model({d2(0.8), d2(0.2)}, 3, 12);
  Rng rng(19);
  for (int t = 0; t < 5; ++t) {
    const Hmm h = oracle::random_hmm(2, ab2(), rng, 0.05);
    const auto pi = oracle::random_positive(2, rng, 0.05);
    const std::size_t n_small = 6 + static_cast<std::size_t>(t);
    const auto r = sanov_check(h, pi, model, n_small);
    const Matrix mx = oracle::direct_expected_moment(model, n_small);
    const auto expect = oracle::set_probability(h, pi, n_small + 1, mx, 1.0);
    CHECK(std::abs(r.probability - static_cast<double>(expect)) <= 1e-12);
    CHECK(std::abs(r.total_mass - 1.0) <= 1e-12);
    CHECK(r.bound == doctest::Approx(std::exp2(-static_cast<double>(n_small) * r.d_clamped * r.d_clamped)));
  }

  // Matching model: D clamps to 0 and the bound is 1.
  const Hmm canon = canonical_hmm(model, 8);
  const auto matched = sanov_check(canon, uniform_initial(2), model, 8);
  CHECK(matched.d_clamped == 0.0);
  CHECK(matched.bound == 1.0);
  CHECK(matched.satisfied);

  // Disjoint supports against a model that mixes both symbols: O has no mass.
  const auto mixed = fixed_model({d2(0.5), d2(0.5)}, 20, 40);
  Matrix stay(1, 1);
  stay << 1.0;
  const Hmm only_a(stay, std::vector<Distribution>{Distribution::point_mass(ab2(), 0)});
  const auto disjoint = sanov_check(only_a, uniform_initial(1), mixed, 8);
  CHECK(disjoint.probability == 0.0);
  CHECK(disjoint.satisfied);

  Matrix big = Matrix::Constant(4, 4, 0.25);
  const Hmm wide(big, std::vector<Distribution>(4, d2(0.5)));
  CHECK_THROWS_AS(sanov_check(wide, uniform_initial(4), fixed_model({d2(0.5), d2(0.6), d2(0.7), d2(0.8)}, 3, 40), 12),
                  std::length_error);
}

TEST_CASE("theorem2 experiment and sweep bookkeeping") {
  const auto model = fixed_model({d2(0.9), d2(0.1)}, 20, 2001);
  const HDeltaSpec spec{0.02, 2, ab2()};
  FitOptions options;
  options.restarts = 3;
  options.max_iter = 200;
  const auto report = theorem2_experiment(model, 2000, spec, options, seeds(4), 2);
  CHECK(report.records.size() == 4);
  CHECK(report.bound == theorem_bound(2, 20));
  std::size_t evaluated = 0;
  for (std::size_t i = 0; i < report.records.size(); ++i) {
    const auto& r = report.records[i];
    CHECK(r.seed == i + 1);
    CHECK(r.d_model == std::max(r.d_model_raw, 0.0));
    CHECK(r.d_empirical == std::max(r.d_empirical_raw, 0.0));
    CHECK(r.d_model_raw >= -3.0 / 20.0 - 1e-12);
    CHECK(r.excluded == (r.loglik_reference > r.loglik_fit));
    CHECK(r.satisfied == (r.d_model <= r.bound));
    evaluated += r.excluded ? 0 : 1;
  }
  CHECK(report.evaluated == evaluated);
  const auto serial = theorem2_experiment(model, 2000, spec, options, seeds(4), 1);
  for (std::size_t i = 0; i < 4; ++i) CHECK(serial.records[i].d_model_raw == report.records[i].d_model_raw);

  ScheduleSpec doubling;
  doubling.kind = ScheduleKind::doubling_nonergodic;
  doubling.horizon = (1u << 11) + 1;
  Rng rng(0);
  const auto dbl = build_schedule(doubling, {d2(0.9), d2(0.1)}, 20, rng);
  const auto sweep = corollary_sweep(dbl, 8, 11, 9, spec, options, seeds(2), 2);
  CHECK(sweep.records.size() == 8);
  for (std::size_t i = 0; i < sweep.records.size(); ++i) {
    const auto& r = sweep.records[i];
    CHECK(r.past_burn_in == (r.n >= (1u << 9)));
    if (!r.past_burn_in) CHECK(r.running_max == 0.0);
    if (i > 0 && sweep.records[i - 1].seed == r.seed) CHECK(r.running_max >= sweep.records[i - 1].running_max);
  }
}
