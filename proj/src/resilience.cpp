#include "hmmres/resilience.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hmmres/kernels.hpp"

namespace hmmres {

namespace {

using Eigen::Index;

double fraction(std::size_t hits, std::size_t total) {
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

double dh_objective(const SecondMoment& m_ref, const Hmm& h, const Matrix& phi) {
  return tv_distance(m_ref.matrix(), generalized_moment_raw(phi, h.transition(), h.emission()));
}

double dh_marginal_gap(const SecondMoment& m_ref, const Matrix& phi) {
  const Vector d = phi.rowwise().sum();
  const Vector bar = m_ref.matrix().rowwise().sum();
  return (d - bar).cwiseAbs().sum();
}

DhResult dh(const SecondMoment& m_ref, const Hmm& h, std::size_t m, double tol) {
  require_same_alphabet(m_ref.alphabet(), h.alphabet());
  if (m <= 2) throw std::invalid_argument("dh: m must exceed 2");
  const Index nx = static_cast<Index>(m_ref.size());
  const Index k = static_cast<Index>(h.k());
  const Matrix g = h.transition() * h.emission();  // g(j, b) = (p chi_b)_j
  const Matrix& mref = m_ref.matrix();
  const Vector bar = mref.rowwise().sum();
  const double slack = 3.0 / static_cast<double>(m);

  // Variables: phi(a, j) at a*k + j, then t(a, b), then s(a).
  const Index n_phi = nx * k;
  const Index t0 = n_phi;
  const Index s0 = n_phi + nx * nx;
  const Index n = s0 + nx;
  auto phi_var = [&](Index a, Index j) { return a * k + j; };
  auto t_var = [&](Index a, Index b) { return t0 + a * nx + b; };

  LinearProgram lp;
  lp.c = Vector::Zero(n);
  lp.c.segment(t0, nx * nx).setOnes();

  const Index rows = 2 * nx * nx + 2 * nx + 1;
  lp.a_ub = Matrix::Zero(rows, n);
  lp.b_ub = Vector::Zero(rows);
  Index r = 0;
  for (Index a = 0; a < nx; ++a) {
    for (Index b = 0; b < nx; ++b) {
      // t_ab >= M_ab - (phi g)_ab  and  t_ab >= (phi g)_ab - M_ab.
      lp.a_ub(r, t_var(a, b)) = -1.0;
      lp.a_ub(r + 1, t_var(a, b)) = -1.0;
      for (Index j = 0; j < k; ++j) {
        lp.a_ub(r, phi_var(a, j)) = -g(j, b);
        lp.a_ub(r + 1, phi_var(a, j)) = g(j, b);
      }
      lp.b_ub(r) = -mref(a, b);
      lp.b_ub(r + 1) = mref(a, b);
      r += 2;
    }
  }
  for (Index a = 0; a < nx; ++a) {
    // s_a >= |d_phi(a) - Mbar(a)|.
    for (Index j = 0; j < k; ++j) {
      lp.a_ub(r, phi_var(a, j)) = 1.0;
      lp.a_ub(r + 1, phi_var(a, j)) = -1.0;
    }
    lp.a_ub(r, s0 + a) = -1.0;
    lp.a_ub(r + 1, s0 + a) = -1.0;
    lp.b_ub(r) = bar(a);
    lp.b_ub(r + 1) = -bar(a);
    r += 2;
  }
  lp.a_ub.row(r).segment(s0, nx).setOnes();
  lp.b_ub(r) = slack;

  lp.a_eq = Matrix::Zero(1, n);
  lp.a_eq.row(0).head(n_phi).setOnes();
  lp.b_eq = Vector::Ones(1);

  const LpSolution sol = solve_lp(lp);
  DhResult out;
  out.status = sol.status;
  out.iterations = sol.iterations;
  out.slack = slack;
  if (sol.status == LpStatus::infeasible)
    throw std::logic_error("dh: the feasible set P is empty, which cannot happen for a stochastic reference moment");
  if (sol.status != LpStatus::optimal) throw std::runtime_error("dh: LP solver stopped with status " + to_string(sol.status));
  out.certificate = std::max({sol.duality_gap, sol.primal_residual, sol.dual_infeasibility});
  if (out.certificate > tol)
    throw std::runtime_error("dh: LP optimum not certified (certificate " + std::to_string(out.certificate) + ")");

  Matrix phi(nx, k);
  for (Index a = 0; a < nx; ++a)
    for (Index j = 0; j < k; ++j) phi(a, j) = std::max(0.0, sol.x(phi_var(a, j)));
  phi /= phi.sum();
  out.infimum = std::max(0.0, sol.objective);
  out.raw = out.infimum - slack;
  out.clamped = std::max(out.raw, 0.0);
  out.argmin_phi.emplace(m_ref.alphabet(), std::move(phi));
  return out;
}

double theorem_bound(std::size_t k, std::size_t m) {
  if (k == 0 || m <= 2) throw std::invalid_argument("theorem_bound: need k >= 1 and m > 2");
  const double km = static_cast<double>(k) * static_cast<double>(m);
  return std::sqrt(std::log2(3.0 * km) / static_cast<double>(m));
}

double lemma2_threshold(std::size_t k, std::size_t m, std::span<const double> w, std::span<const Distribution> sources,
                        double eps) {
  if (w.size() != sources.size()) throw std::invalid_argument("lemma2_threshold: weight count mismatch");
  const double km = static_cast<double>(k) * static_cast<double>(m);
  double mixture_entropy = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) mixture_entropy += w[j] * entropy(sources[j]);
  return -std::log2(2.0 * km) / static_cast<double>(m) - mixture_entropy - eps;
}

double entropy_rate(const IntervalModel& model, std::size_t n) {
  const auto w = weights(model, n);
  double h = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) h += w[j] * entropy(model.source(j));
  return h;
}

Lemma2Report lemma2_check(const IntervalModel& model, std::size_t n, std::span<const std::uint64_t> seeds,
                          double eps_tol, int jobs) {
  if (n < 2) throw std::invalid_argument("lemma2_check: N must be at least 2");
  auto [h, ignored_pi] = reference_hmm(model.sources(), model.m());
  const StateWeights pi = point_initial(model.k(), model.kappa(0));
  const double threshold = lemma2_threshold(model.k(), model.m(), weights(model, n), model.sources(), eps_tol);

  Lemma2Report report;
  report.eps_tol = eps_tol;
  report.records.resize(seeds.size());
  kernels::parallel_for(seeds.size(), jobs, [&](std::size_t i) {
    Rng rng(seeds[i]);
    const auto s = sample(model, n, rng);
    auto& rec = report.records[i];
    rec.seed = seeds[i];
    rec.loglik = log_likelihood(s.x, h, pi);
    rec.threshold = threshold;
    rec.margin = rec.loglik - threshold;
    rec.pass = rec.loglik >= threshold;
  });
  const auto hits = std::count_if(report.records.begin(), report.records.end(), [](const auto& r) { return r.pass; });
  report.pass_rate = fraction(static_cast<std::size_t>(hits), report.records.size());
  return report;
}

namespace {

double pure_pair_deviation(const IntervalModel& model, const LabeledSample& s, std::size_t n) {
  const std::size_t nx = model.alphabet()->size();
  double worst = 0.0;
  for (std::size_t j = 0; j < model.k(); ++j) {
    const auto& mu = model.source(j);
    for (std::size_t parity = 0; parity < 2; ++parity) {
      Matrix counts = Matrix::Zero(static_cast<Index>(nx), static_cast<Index>(nx));
      std::size_t total = 0;
      for (std::size_t i = parity; i < n; i += 2) {
        if (s.kappa[i] != j || s.kappa[i + 1] != j) continue;
        counts(s.x[i], s.x[i + 1]) += 1.0;
        ++total;
      }
      if (total == 0) continue;
      counts /= static_cast<double>(total);
      worst = std::max(worst, tv_distance(counts, SecondMoment::product(mu, mu).matrix()));
    }
  }
  return worst;
}

}  // namespace

ConcentrationReport moment_concentration_check(const IntervalModel& model, std::size_t n,
                                               std::span<const std::uint64_t> seeds, std::vector<double> eps_grid,
                                               int jobs) {
  if (n < 1) throw std::invalid_argument("moment_concentration_check: N must be positive");
  const SecondMoment mx = expected_moment(model, n).total;
  const double md = static_cast<double>(model.m());

  ConcentrationReport report;
  report.eps_grid = std::move(eps_grid);
  report.radius = 3.0 / md;
  report.records.resize(seeds.size());
  kernels::parallel_for(seeds.size(), jobs, [&](std::size_t i) {
    Rng rng(seeds[i]);
    const auto s = sample(model, n + 1, rng);
    auto& rec = report.records[i];
    rec.seed = seeds[i];
    rec.tv = tv_distance(empirical_moment(s.x, model.alphabet()), mx);
    rec.within_u = rec.tv <= report.radius;
    rec.pure_pair_deviation = pure_pair_deviation(model, s, n);
    for (double eps : report.eps_grid) rec.within_eps.push_back(rec.tv <= eps + 2.0 / md);
  });
  std::size_t in_u = 0;
  report.fraction_within_eps.assign(report.eps_grid.size(), 0.0);
  for (const auto& rec : report.records) {
    in_u += rec.within_u ? 1 : 0;
    for (std::size_t e = 0; e < rec.within_eps.size(); ++e) report.fraction_within_eps[e] += rec.within_eps[e] ? 1.0 : 0.0;
  }
  report.fraction_within_u = fraction(in_u, report.records.size());
  for (double& f : report.fraction_within_eps) f = report.records.empty() ? 0.0 : f / static_cast<double>(report.records.size());
  return report;
}

AepReport aep_check(const IntervalModel& model, std::size_t n, std::span<const std::uint64_t> seeds, double eps_tol,
                    int jobs) {
  if (n < 1) throw std::invalid_argument("aep_check: N must be positive");
  const double rate = entropy_rate(model, n);
  AepReport report;
  report.eps_tol = eps_tol;
  report.records.resize(seeds.size());
  kernels::parallel_for(seeds.size(), jobs, [&](std::size_t i) {
    Rng rng(seeds[i]);
    const auto s = sample(model, n, rng);
    double log_prob = 0.0;
    for (std::size_t t = 0; t < n; ++t) log_prob += std::log2(model.source(s.kappa[t])[s.x[t]]);
    auto& rec = report.records[i];
    rec.seed = seeds[i];
    rec.neg_log_prob_rate = -log_prob / static_cast<double>(n);
    rec.entropy_rate = rate;
    rec.deviation = rec.neg_log_prob_rate - rate;
    rec.pass = std::abs(rec.deviation) <= eps_tol;
  });
  const auto hits = std::count_if(report.records.begin(), report.records.end(), [](const auto& r) { return r.pass; });
  report.pass_rate = fraction(static_cast<std::size_t>(hits), report.records.size());
  return report;
}

SanovReport sanov_check(const Hmm& h, std::span<const double> pi, const IntervalModel& model, std::size_t n_small) {
  require_same_alphabet(h.alphabet(), model.alphabet());
  if (n_small < 1) throw std::invalid_argument("sanov_check: N must be positive");
  const double len = static_cast<double>(n_small + 1);
  if (std::pow(static_cast<double>(h.k()), len) > 1e7 ||
      std::pow(static_cast<double>(h.k() * h.alphabet_size()), len) > 1e8)
    throw std::length_error("sanov_check: enumeration guard exceeded");

  const SecondMoment mx = expected_moment(model, n_small).total;
  const double radius = 3.0 / static_cast<double>(model.m());
  const std::size_t nx = h.alphabet_size();
  const double inv_n = 1.0 / static_cast<double>(n_small);
  const Matrix target = mx.matrix();
  auto in_u = [&](std::span<const long long> counts) {
    double tv = 0.0;
    for (std::size_t a = 0; a < nx; ++a)
      for (std::size_t b = 0; b < nx; ++b)
        tv += std::abs(static_cast<double>(counts[a * nx + b]) * inv_n - target(static_cast<Index>(a), static_cast<Index>(b)));
    return tv <= radius + 1e-12;
  };
  const auto prob = kernels::omp::set_probability(h, pi, n_small + 1, in_u);
  const DhResult d = dh(mx, h, model.m());

  SanovReport out;
  out.n_small = n_small;
  out.probability = prob.accepted;
  out.total_mass = prob.total;
  out.d_raw = d.raw;
  out.d_clamped = d.clamped;
  out.bound = std::exp2(-static_cast<double>(n_small) * d.clamped * d.clamped);
  out.satisfied = out.probability <= out.bound;
  return out;
}

std::uint64_t fit_seed_for(std::uint64_t seed) { return seed ^ 0x9E3779B97F4A7C15ULL; }

namespace {

// One sample, one fit, both D values.
Theorem2Record evaluate_fit(const IntervalModel& model, std::span<const Symbol> x, std::size_t n,
                            const HDeltaSpec& spec, FitOptions options, std::uint64_t seed) {
  options.seed = fit_seed_for(seed);
  options.jobs = 1;
  const FitResult fitted = fit(x, spec, options);
  auto [ref, ignored_pi] = reference_hmm(model.sources(), model.m());
  const StateWeights ref_pi = point_initial(model.k(), model.kappa(0));
  const SecondMoment mx = expected_moment(model, n).total;

  Theorem2Record rec;
  rec.seed = seed;
  rec.loglik_fit = fitted.loglik;
  rec.loglik_reference = log_likelihood(x, ref, ref_pi);
  const DhResult d_model = dh(mx, fitted.hmm, model.m());
  const DhResult d_emp = dh(empirical_moment(x, model.alphabet()), fitted.hmm, model.m());
  rec.d_model_raw = d_model.raw;
  rec.d_model = d_model.clamped;
  rec.d_empirical_raw = d_emp.raw;
  rec.d_empirical = d_emp.clamped;
  rec.bound = theorem_bound(model.k(), model.m());
  rec.satisfied = rec.d_model <= rec.bound;
  rec.excluded = rec.loglik_reference > rec.loglik_fit;
  if (fitted.hmm.k() == model.k()) {
    const auto match = match_states(fitted.hmm, model.sources());
    rec.emission_tv = *std::max_element(match.tv.begin(), match.tv.end());
  }
  rec.likelihood_upper = -rec.d_model * rec.d_model - entropy_rate(model, x.size());
  for (const auto& t : fitted.restarts) {
    rec.clip_events += t.clip_events;
    rec.monotonicity_violations += t.monotonicity_violations;
  }
  return rec;
}

}  // namespace

BoundReport theorem2_experiment(const IntervalModel& model, std::size_t n, const HDeltaSpec& spec,
                                const FitOptions& options, std::span<const std::uint64_t> seeds, int jobs) {
  validate(spec, model.m(), model.sources());
  BoundReport report;
  report.bound = theorem_bound(model.k(), model.m());
  report.records.resize(seeds.size());
  kernels::parallel_for(seeds.size(), jobs, [&](std::size_t i) {
    Rng rng(seeds[i]);
    const auto s = sample(model, n + 1, rng);
    report.records[i] = evaluate_fit(model, s.x, n, spec, options, seeds[i]);
  });
  for (const auto& r : report.records) {
    if (r.excluded) continue;
    ++report.evaluated;
    report.satisfied += r.satisfied ? 1 : 0;
  }
  report.pass_rate = fraction(report.satisfied, report.evaluated);
  return report;
}

SweepReport corollary_sweep(const IntervalModel& model, unsigned min_exp, unsigned max_exp, unsigned burn_in_exp,
                            const HDeltaSpec& spec, const FitOptions& options, std::span<const std::uint64_t> seeds,
                            int jobs) {
  validate(spec, model.m(), model.sources());
  if (min_exp > max_exp || max_exp > 40) throw std::invalid_argument("corollary_sweep: bad exponent range");
  const std::size_t steps = max_exp - min_exp + 1;
  const std::size_t longest = (std::size_t{1} << max_exp) + 1;

  std::vector<LabeledSample> samples(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    Rng rng(seeds[i]);
    samples[i] = sample(model, longest, rng);
  }

  SweepReport report;
  report.bound = theorem_bound(model.k(), model.m());
  report.records.resize(seeds.size() * steps);
  kernels::parallel_for(report.records.size(), jobs, [&](std::size_t task) {
    const std::size_t i = task / steps;
    const unsigned e = min_exp + static_cast<unsigned>(task % steps);
    const std::size_t n = std::size_t{1} << e;
    const std::span<const Symbol> prefix(samples[i].x.data(), n + 1);
    const Theorem2Record rec = evaluate_fit(model, prefix, n, spec, options, seeds[i]);
    auto& out = report.records[task];
    out.seed = seeds[i];
    out.n = n;
    out.d_model = rec.d_model;
    out.past_burn_in = e >= burn_in_exp;
    out.w_first = weights(model, n)[0];
  });

  report.all_satisfied = true;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    double running = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      auto& rec = report.records[i * steps + s];
      if (rec.past_burn_in) running = std::max(running, rec.d_model);
      rec.running_max = running;
      rec.satisfied = running <= report.bound;
      report.all_satisfied = report.all_satisfied && rec.satisfied;
    }
  }
  return report;
}

}  // namespace hmmres
