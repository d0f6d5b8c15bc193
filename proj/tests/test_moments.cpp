#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hmmres/moments.hpp"
#include "oracles.hpp"

using namespace hmmres;

namespace {

AlphabetPtr ab2() { return Alphabet::indexed(2); }
Distribution d2(double p) { return Distribution(ab2(), {p, 1.0 - p}); }

IntervalModel fixed5() {
  ScheduleSpec spec;
  spec.kind = ScheduleKind::fixed_length;
  spec.length = 5;
  spec.horizon = 10;
  Rng rng(0);
  return build_schedule(spec, {d2(0.9), d2(0.1)}, 5, rng);
}

IntervalModel random_model(Rng& rng, std::size_t k, std::size_t nx) {
  auto alphabet = Alphabet::indexed(nx);
  std::vector<Distribution> sources;
  for (std::size_t j = 0; j < k; ++j) sources.emplace_back(alphabet, random_simplex_point(nx, rng));
  ScheduleSpec spec;
  spec.kind = k >= 2 ? ScheduleKind::random_length : ScheduleKind::fixed_length;
  const std::size_t m = 3 + rng.uniform_int(0, 20);
  spec.length = m;
  spec.min_length = m;
  spec.max_length = 4 * m;
  spec.horizon = 200 + rng.uniform_int(0, 800);
  return build_schedule(spec, sources, m, rng);
}

ProperSystem random_system(Rng& rng, const AlphabetPtr& alphabet, std::size_t k) {
  const auto flat = random_simplex_point(alphabet->size() * k, rng);
  Matrix phi(static_cast<Eigen::Index>(alphabet->size()), static_cast<Eigen::Index>(k));
  for (std::size_t a = 0; a < alphabet->size(); ++a)
    for (std::size_t j = 0; j < k; ++j) phi(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j)) = flat[a * k + j];
  return ProperSystem(alphabet, phi);
}

}  // namespace

TEST_CASE("empirical moment examples") {
  const Sequence x = {0, 0, 1};
  const auto m = empirical_moment(x, ab2());
  CHECK(m(0, 0) == 0.5);
  CHECK(m(0, 1) == 0.5);
  CHECK(m(1, 0) == 0.0);
  CHECK(m(1, 1) == 0.0);
  CHECK(marginalize_left(m).probs()[0] == 1.0);
  CHECK(marginalize_right(m)[0] == 0.5);
  CHECK(marginalize_right(m)[1] == 0.5);

  const Sequence constant(11, 1);
  CHECK(tv_distance(empirical_moment(constant, ab2()), SecondMoment::point_mass(ab2(), 1, 1)) == 0.0);
  CHECK_THROWS_AS(empirical_moment(Sequence{1}, ab2()), std::invalid_argument);
}

TEST_CASE("empirical moment matches a counting oracle and splits over concatenation") {
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const std::size_t nx = 2 + rng.uniform_int(0, 5);
    auto alphabet = Alphabet::indexed(nx);
    Sequence x(2 + rng.uniform_int(0, 500));
    for (auto& s : x) s = static_cast<Symbol>(rng.uniform_int(0, nx - 1));
    CHECK(empirical_moment(x, alphabet).matrix() == oracle::hash_count_moment(x, nx));

    const std::size_t cut = 1 + rng.uniform_int(0, x.size() - 2);
    const Sequence left(x.begin(), x.begin() + static_cast<long>(cut) + 1);
    const Sequence right(x.begin() + static_cast<long>(cut), x.end());
    CHECK(pair_counts(left, nx) + pair_counts(right, nx) == pair_counts(x, nx));
  }
}

TEST_CASE("marginals of products and symmetric moments") {
  const auto mu = Distribution(Alphabet::indexed(3), {0.2, 0.3, 0.5});
  const auto nu = Distribution(Alphabet::indexed(3), {0.6, 0.3, 0.1});
  const auto m = SecondMoment::product(mu, nu);
  CHECK(tv_distance(marginalize_left(m), mu) < 1e-15);
  CHECK(tv_distance(marginalize_right(m), nu) < 1e-15);
  Matrix sym(2, 2);
  sym << 0.4, 0.1, 0.1, 0.4;
  const SecondMoment s(ab2(), sym);
  CHECK(marginalize_left(s) == marginalize_right(s));
  Matrix bad(2, 2);
  bad << 0.5, 0.5, 0.5, -0.5;
  CHECK_THROWS_AS(SecondMoment(ab2(), bad), std::invalid_argument);
}

TEST_CASE("generalized moment scalar case") {
  const auto mu = d2(0.3);
  const auto nu = d2(0.8);
  Matrix phi(2, 1);
  phi << 0.3, 0.7;
  Matrix p(1, 1);
  p << 1.0;
  const Hmm h(p, std::vector<Distribution>{nu});
  const auto m = generalized_moment(ProperSystem(ab2(), phi), h);
  CHECK(tv_distance(m, SecondMoment::product(mu, nu)) < 1e-15);
  CHECK(d_phi(ProperSystem(ab2(), phi))[1] == 0.7);
  CHECK_THROWS_AS(ProperSystem(ab2(), Matrix::Constant(2, 1, 0.6)), std::invalid_argument);
}

TEST_CASE("canonical system examples") {
  const auto model = fixed5();
  const auto canon = canonical_phi(model, 9);
  CHECK(canon.u.rowwise().sum()(0) == doctest::Approx(5.0 / 9.0));
  CHECK(canon.u.rowwise().sum()(1) == doctest::Approx(4.0 / 9.0));
  CHECK(canon.phi.matrix().sum() == doctest::Approx(1.0).epsilon(1e-14));
  const auto m_x = expected_moment(model, 9).total;
  CHECK(tv_distance(d_phi(canon.phi), marginalize_left(m_x)) < 1e-12);
  const Hmm canon_h = canonical_hmm(model, 9);
  // Raw bilinear identity with the unnormalized U: rows mu_r(a), no weights.
  Matrix bare(2, 2);
  for (Symbol a = 0; a < 2; ++a)
    for (std::size_t r = 0; r < 2; ++r) bare(a, static_cast<Eigen::Index>(r)) = model.source(r)[a];
  CHECK((generalized_moment_raw(bare, canon.u, canon_h.emission()) - m_x.matrix()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((canon_h.transition().row(0) - canon.u.row(0) / canon.u.row(0).sum()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(tv_distance(generalized_moment(canon.phi, canonical_hmm(model, 9)), m_x) < 1e-12);

  const IntervalModel single({d2(0.3)}, {20}, {0}, 3, 20);
  const auto one = canonical_phi(single, 10);
  CHECK(one.u(0, 0) == 1.0);
  CHECK(one.phi(0, 0) == doctest::Approx(0.3));

  Matrix uniform = Matrix::Constant(2, 3, 1.0 / 6.0);
  const auto d = d_phi(ProperSystem(ab2(), uniform));
  CHECK(d[0] == doctest::Approx(0.5));
}

TEST_CASE("property: canonical system reproduces M_X on random models") {
  Rng rng(31);
  for (int t = 0; t < 50; ++t) {
    const auto model = random_model(rng, 1 + rng.uniform_int(0, 3), 2 + rng.uniform_int(0, 4));
    const std::size_t n = model.horizon() - 1;
    const auto canon = canonical_phi(model, n);
    const auto m_x = expected_moment(model, n).total;
    CHECK(tv_distance(generalized_moment(canon.phi, canonical_hmm(model, n)), m_x) < 1e-12);
    CHECK(tv_distance(d_phi(canon.phi), marginalize_left(m_x)) < 1e-12);
  }
}

TEST_CASE("property: linearity, marginal identity and image of generalized moments") {
  Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    const std::size_t k = 1 + rng.uniform_int(0, 3);
    const std::size_t nx = 2 + rng.uniform_int(0, 4);
    auto alphabet = Alphabet::indexed(nx);
    const Hmm h = oracle::random_hmm(k, alphabet, rng);
    const auto a = random_system(rng, alphabet, k);
    const auto b = random_system(rng, alphabet, k);
    const double lambda = rng.uniform();
    const ProperSystem mix(alphabet, lambda * a.matrix() + (1.0 - lambda) * b.matrix());
    const Matrix lhs = generalized_moment(mix, h).matrix();
    const Matrix rhs = lambda * generalized_moment(a, h).matrix() + (1.0 - lambda) * generalized_moment(b, h).matrix();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);

    const auto m = generalized_moment(a, h);
    CHECK(m.matrix().sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tv_distance(marginalize_left(m), d_phi(a)) <= 1e-12);

    std::vector<Distribution> emissions;
    for (std::size_t j = 0; j < k; ++j) emissions.push_back(h.emission_distribution(j));
    // Im(M_{phi,H}) lies in span{nu_j}; rows of M are combinations of the nu_j.
    CHECK(column_space_residual(Matrix(m.matrix().transpose()), emissions) <= 1e-10);
  }
}

TEST_CASE("column space residual") {
  const auto mu = d2(0.3);
  const std::vector<Distribution> basis_mu = {mu};
  CHECK(column_space_residual(SecondMoment::product(mu, mu), basis_mu) <= 1e-15);

  const auto alphabet = Alphabet::indexed(3);
  const Distribution mu1(alphabet, {0.7, 0.2, 0.1});
  const Distribution mu2(alphabet, {0.1, 0.3, 0.6});
  ScheduleSpec spec;
  spec.kind = ScheduleKind::fixed_length;
  spec.length = 5;
  spec.horizon = 50;
  Rng rng(0);
  const auto model = build_schedule(spec, {mu1, mu2}, 5, rng);
  const auto m_x = expected_moment(model, 49).total;
  const std::vector<Distribution> both = {mu1, mu2};
  const std::vector<Distribution> only_first = {mu1};
  CHECK(column_space_residual(m_x, both) <= 1e-10);
  const double withheld = column_space_residual(m_x, only_first);
  CHECK(withheld > 0.01);

  // Projection oracle: the residual of column b is M_X(., b) minus its
  // projection on mu1, whose L2 norm the library reports as a maximum.
  Eigen::Vector3d u(0.7, 0.2, 0.1);
  double worst = 0;
  for (int b = 0; b < 3; ++b) {
    const Eigen::Vector3d col = m_x.matrix().col(b);
    worst = std::max(worst, (col - u * (u.dot(col) / u.dot(u))).norm());
  }
  CHECK(withheld == doctest::Approx(worst).epsilon(1e-10));

  // A rank-deficient basis (repeated vector) is tolerated.
  const std::vector<Distribution> repeated = {mu1, mu1, mu2};
  CHECK(column_space_residual(m_x, repeated) <= 1e-10);
}
