#include "hmmres/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "hmmres/kernels.hpp"

namespace hmmres {

void validate(const HDeltaSpec& spec, std::optional<std::size_t> m, std::span<const Distribution> sources) {
  if (spec.k == 0) throw std::invalid_argument("H_delta: k must be positive");
  if (!spec.alphabet) throw std::invalid_argument("H_delta: alphabet required");
  if (!(spec.delta >= 0.0)) throw std::invalid_argument("H_delta: delta must be nonnegative");
  const double widest = static_cast<double>(std::max(spec.k, spec.alphabet->size()));
  if (spec.delta * widest > 1.0) throw std::invalid_argument("H_delta: delta * max(k, |X|) exceeds 1, class is empty");
  if (m && spec.delta > 1.0 / static_cast<double>(*m)) throw std::invalid_argument("H_delta: delta exceeds 1/m");
  for (const auto& s : sources)
    for (double p : s.probs())
      if (spec.delta > p) throw std::invalid_argument("H_delta: delta exceeds a source probability");
}

bool is_in_h_delta(const Hmm& h, double delta) {
  const double floor = delta - 1e-12;
  return h.transition().minCoeff() >= floor && h.emission().minCoeff() >= floor;
}

bool project_row_to_floor(std::span<double> row, double delta) {
  const std::size_t n = row.size();
  if (delta <= 0.0) return false;
  if (delta * static_cast<double>(n) > 1.0 + 1e-12) throw std::invalid_argument("project_row_to_floor: delta too large");
  std::vector<bool> fixed(n, false);
  std::size_t n_fixed = 0;
  bool changed = false;
  while (true) {
    double free_mass = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (!fixed[i]) free_mass += row[i];
    const double target = 1.0 - delta * static_cast<double>(n_fixed);
    bool raised = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (fixed[i]) continue;
      const double v = free_mass > 0.0 ? row[i] * target / free_mass : target / static_cast<double>(n - n_fixed);
      if (v < delta) {
        fixed[i] = true;
        ++n_fixed;
        raised = true;
      }
    }
    if (!raised) {
      for (std::size_t i = 0; i < n; ++i) {
        if (fixed[i]) {
          row[i] = delta;
        } else {
          row[i] = free_mass > 0.0 ? row[i] * target / free_mass : target / static_cast<double>(n - n_fixed);
        }
      }
      return changed || n_fixed > 0;
    }
    changed = true;
    if (n_fixed == n) {
      for (double& v : row) v = 1.0 / static_cast<double>(n);
      return true;
    }
  }
}

namespace {

// Renormalizes a row so it sums to exactly 1 up to one rounding.
void renormalize(std::span<double> row) {
  const double s = std::accumulate(row.begin(), row.end(), 0.0);
  for (double& v : row) v /= s;
}

}  // namespace

EmStep em_step(const Hmm& h, std::span<const double> pi, std::span<const Symbol> x, double delta) {
  if (x.size() < 2) throw std::invalid_argument("em_step needs |x| >= 2");
  validate_initial(pi, h.k());
  const std::size_t k = h.k();
  const std::size_t n_sym = h.alphabet_size();
  const std::size_t len = x.size();
  for (Symbol s : x)
    if (s >= n_sym) throw std::out_of_range("em_step: symbol outside alphabet");

  // Row-major copies for tight loops.
  std::vector<double> p(k * k), e(k * n_sym);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) p[i * k + j] = h.p(i, j);
    for (std::size_t a = 0; a < n_sym; ++a) e[i * n_sym + a] = h.nu(i, static_cast<Symbol>(a));
  }

  std::vector<double> alpha(len * k), scale(len);
  double log_total = 0.0;
  for (std::size_t t = 0; t < len; ++t) {
    double* cur = &alpha[t * k];
    if (t == 0) {
      for (std::size_t j = 0; j < k; ++j) cur[j] = pi[j] * e[j * n_sym + x[0]];
    } else {
      const double* prev = &alpha[(t - 1) * k];
      for (std::size_t j = 0; j < k; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < k; ++i) acc += prev[i] * p[i * k + j];
        cur[j] = acc * e[j * n_sym + x[t]];
      }
    }
    double c = 0.0;
    for (std::size_t j = 0; j < k; ++j) c += cur[j];
    if (!(c > 0.0) || !std::isfinite(c))
      throw std::runtime_error("em_step: forward pass underflow or NaN at position " + std::to_string(t));
    for (std::size_t j = 0; j < k; ++j) cur[j] /= c;
    scale[t] = c;
    log_total += std::log2(c);
  }

  std::vector<double> beta(k, 1.0), beta_prev(k), weighted(k);
  std::vector<double> trans_num(k * k, 0.0), emis_num(k * n_sym, 0.0);
  // Position len-1.
  for (std::size_t j = 0; j < k; ++j) emis_num[j * n_sym + x[len - 1]] += alpha[(len - 1) * k + j];
  for (std::size_t t = len - 1; t-- > 0;) {
    const double* a_t = &alpha[t * k];
    for (std::size_t j = 0; j < k; ++j) weighted[j] = e[j * n_sym + x[t + 1]] * beta[j] / scale[t + 1];
    for (std::size_t i = 0; i < k; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const double w = p[i * k + j] * weighted[j];
        trans_num[i * k + j] += a_t[i] * w;
        acc += w;
      }
      beta_prev[i] = acc;
    }
    beta.swap(beta_prev);
    for (std::size_t i = 0; i < k; ++i) emis_num[i * n_sym + x[t]] += a_t[i] * beta[i];
  }
  // gamma_0 = alpha_0 * beta_0.
  StateWeights new_pi(k);
  for (std::size_t i = 0; i < k; ++i) new_pi[i] = alpha[i] * beta[i];

  for (double v : trans_num)
    if (!std::isfinite(v)) throw std::runtime_error("em_step: NaN in expected transition counts");
  for (double v : emis_num)
    if (!std::isfinite(v)) throw std::runtime_error("em_step: NaN in expected emission counts");

  bool clipped = false;
  Matrix new_p(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  Matrix new_e(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n_sym));
  std::vector<double> row;
  for (std::size_t i = 0; i < k; ++i) {
    row.assign(trans_num.begin() + static_cast<std::ptrdiff_t>(i * k), trans_num.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
    double s = std::accumulate(row.begin(), row.end(), 0.0);
    if (s > 0.0) {
      for (double& v : row) v /= s;
    } else {
      row.assign(p.begin() + static_cast<std::ptrdiff_t>(i * k), p.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
    }
    clipped |= project_row_to_floor(row, delta);
    renormalize(row);
    for (std::size_t j = 0; j < k; ++j) new_p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];

    row.assign(emis_num.begin() + static_cast<std::ptrdiff_t>(i * n_sym), emis_num.begin() + static_cast<std::ptrdiff_t>((i + 1) * n_sym));
    s = std::accumulate(row.begin(), row.end(), 0.0);
    if (s > 0.0) {
      for (double& v : row) v /= s;
    } else {
      row.assign(e.begin() + static_cast<std::ptrdiff_t>(i * n_sym), e.begin() + static_cast<std::ptrdiff_t>((i + 1) * n_sym));
    }
    clipped |= project_row_to_floor(row, delta);
    renormalize(row);
    for (std::size_t a = 0; a < n_sym; ++a) new_e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) = row[a];
  }
  renormalize(new_pi);

  return {Hmm(h.alphabet(), std::move(new_p), std::move(new_e)), std::move(new_pi),
          log_total / static_cast<double>(len), clipped};
}

std::pair<EmStep, RestartTrace> fit_from(std::span<const Symbol> x, const Hmm& init, std::span<const double> init_pi,
                                         double delta, std::size_t max_iter, double tol) {
  RestartTrace trace;
  EmStep current{init, StateWeights(init_pi.begin(), init_pi.end()), 0.0, false};
  double previous = -kInfinity;
  bool previous_clipped = true;
  for (std::size_t it = 0; it < max_iter; ++it) {
    EmStep next = em_step(current.hmm, current.pi, x, delta);
    const double ll = next.loglik_before;  // likelihood of current
    trace.loglik.push_back(ll);
    trace.iterations = it + 1;
    if (!previous_clipped && ll < previous - 1e-12 * std::max(1.0, std::abs(previous))) ++trace.monotonicity_violations;
    if (next.clipped) ++trace.clip_events;
    const double improvement = ll - previous;
    if (it > 0 && std::abs(improvement) < tol) {
      trace.converged = true;
      break;
    }
    previous = ll;
    previous_clipped = next.clipped;
    current = std::move(next);
  }
  current.loglik_before = log_likelihood(x, current.hmm, current.pi);
  trace.final_loglik = current.loglik_before;
  return {std::move(current), std::move(trace)};
}

Hmm random_initial_hmm(const HDeltaSpec& spec, double dwell_hint, Rng& rng) {
  const std::size_t k = spec.k;
  const std::size_t n_sym = spec.alphabet->size();
  double dwell = dwell_hint > 0.0 ? dwell_hint : (spec.delta > 0.0 ? 1.0 / spec.delta : 10.0);
  dwell = std::max(dwell, 2.0);
  Matrix p(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  Matrix e(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n_sym));
  std::vector<double> row;
  for (std::size_t i = 0; i < k; ++i) {
    row = random_simplex_point(n_sym, rng);
    project_row_to_floor(row, spec.delta);
    renormalize(row);
    for (std::size_t a = 0; a < n_sym; ++a) e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) = row[a];

    row.assign(k, 0.0);
    if (k == 1) {
      row[0] = 1.0;
    } else {
      // Diagonal-dominant: leave mass about 1/dwell, jittered by [0.5, 1.5).
      const double leave = std::min(0.5, (0.5 + rng.uniform()) / dwell);
      const auto spread = random_simplex_point(k - 1, rng);
      for (std::size_t j = 0, o = 0; j < k; ++j) row[j] = j == i ? 1.0 - leave : leave * spread[o++];
    }
    project_row_to_floor(row, spec.delta);
    renormalize(row);
    for (std::size_t j = 0; j < k; ++j) p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
  }
  return {spec.alphabet, std::move(p), std::move(e)};
}

FitResult fit(std::span<const Symbol> x, const HDeltaSpec& spec, const FitOptions& options) {
  validate(spec);
  if (x.size() < 2) throw std::invalid_argument("fit needs |x| >= 2");
  if (options.restarts == 0) throw std::invalid_argument("fit needs at least one restart");
  for (Symbol s : x)
    if (s >= spec.alphabet->size()) throw std::out_of_range("fit: symbol outside alphabet");

  struct Outcome {
    std::optional<EmStep> model;
    RestartTrace trace;
  };
  std::vector<Outcome> outcomes(options.restarts);
  kernels::parallel_for(options.restarts, options.jobs, [&](std::size_t r) {
    Rng rng(options.seed ^ static_cast<std::uint64_t>(r));
    const Hmm init = random_initial_hmm(spec, options.dwell_hint, rng);
    auto [model, trace] = fit_from(x, init, uniform_initial(spec.k), spec.delta, options.max_iter, options.tol);
    trace.seed = rng.seed();
    outcomes[r] = Outcome{std::move(model), std::move(trace)};
  });

  std::size_t best = 0;
  for (std::size_t r = 1; r < outcomes.size(); ++r)
    if (outcomes[r].trace.final_loglik > outcomes[best].trace.final_loglik) best = r;

  FitResult result{outcomes[best].model->hmm, outcomes[best].model->pi, outcomes[best].trace.final_loglik, best,
                   outcomes[best].trace.converged, options.seed, {}};
  result.restarts.reserve(outcomes.size());
  for (auto& o : outcomes) result.restarts.push_back(std::move(o.trace));
  return result;
}

std::vector<double> parameter_vector(const Hmm& h) {
  std::vector<double> v;
  v.reserve(h.k() * h.k() + h.k() * h.alphabet_size());
  for (std::size_t i = 0; i < h.k(); ++i)
    for (std::size_t j = 0; j < h.k(); ++j) v.push_back(h.p(i, j));
  for (std::size_t i = 0; i < h.k(); ++i)
    for (Symbol a = 0; a < h.alphabet_size(); ++a) v.push_back(h.nu(i, a));
  return v;
}

double dstar_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dstar_distance: parameter count mismatch");
  double d = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (!(a[t] > 0.0) || !(b[t] > 0.0)) throw std::invalid_argument("dstar_distance: parameters must be positive");
    d = std::max(d, std::abs(std::log2(a[t] / b[t])));
  }
  return d;
}

double dstar_distance(const Hmm& a, const Hmm& b) {
  if (a.k() != b.k()) throw std::invalid_argument("dstar_distance: state count mismatch");
  require_same_alphabet(a.alphabet(), b.alphabet());
  return dstar_distance(parameter_vector(a), parameter_vector(b));
}

StateMatching match_states(const Hmm& fitted, std::span<const Distribution> sources) {
  const std::size_t k = fitted.k();
  if (sources.size() != k) throw std::invalid_argument("match_states: state and source counts differ");
  std::vector<std::vector<double>> cost(k, std::vector<double>(k));
  for (std::size_t i = 0; i < k; ++i) {
    const auto row = fitted.emission().row(static_cast<Eigen::Index>(i));
    const std::vector<double> nu(row.begin(), row.end());
    for (std::size_t j = 0; j < k; ++j) cost[i][j] = tv_distance(nu, sources[j].probs());
  }
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  StateMatching best;
  best.total = kInfinity;
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) total += cost[i][perm[i]];
    if (total < best.total) {
      best.total = total;
      best.source_of_state = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  best.tv.resize(k);
  for (std::size_t i = 0; i < k; ++i) best.tv[i] = cost[i][best.source_of_state[i]];
  return best;
}

}  // namespace hmmres
