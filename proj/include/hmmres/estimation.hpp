#pragma once

// Maximum-likelihood estimation over H_delta, the HMMs whose transition and
// emission probabilities are all >= delta. Baum-Welch steps are followed by a
// projection onto H_delta; the best of several random restarts is returned.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hmmres/hmm.hpp"

namespace hmmres {

struct HDeltaSpec {
  double delta = 0.0;
  std::size_t k = 1;
  AlphabetPtr alphabet;
};

/// Throws std::invalid_argument when delta is outside [0, 1/m] (m given), when
/// delta * max(k, |X|) > 1 (H_delta empty), or when delta exceeds a source
/// probability (sources given).
void validate(const HDeltaSpec& spec, std::optional<std::size_t> m = std::nullopt,
              std::span<const Distribution> sources = {});

/// All p_ij >= delta and all nu_j(a) >= delta, up to 1e-12 of rounding.
bool is_in_h_delta(const Hmm& h, double delta);

/// Raises entries below delta to delta and rescales the rest to keep the row
/// a distribution, repeating until no entry is below delta. Returns true if
/// any entry was raised. Requires delta * |row| <= 1.
bool project_row_to_floor(std::span<double> row, double delta);

struct EmStep {
  Hmm hmm;
  StateWeights pi;
  double loglik_before = 0.0;  // per-symbol log-likelihood of the input model
  bool clipped = false;        // the delta projection changed something
};

/// One Baum-Welch update (scaled forward-backward, expected counts,
/// re-estimation of p, nu and pi) followed by the H_delta projection of every
/// transition and emission row. pi is not floored.
/// Throws std::runtime_error on numerical failure.
EmStep em_step(const Hmm& h, std::span<const double> pi, std::span<const Symbol> x, double delta);

struct FitOptions {
  std::size_t restarts = 10;
  std::size_t max_iter = 500;
  double tol = 1e-7;          // bits per symbol
  std::uint64_t seed = 0;
  double dwell_hint = 0.0;    // expected dwell for the initial transitions; 0 means 1/delta
  int jobs = 1;               // restarts run concurrently when > 1 (0 = OpenMP default)
};

struct RestartTrace {
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t clip_events = 0;
  std::size_t monotonicity_violations = 0;  // decreases on unclipped steps
  double final_loglik = 0.0;
  std::vector<double> loglik;  // per-iteration values
};

struct FitResult {
  Hmm hmm;
  StateWeights pi;
  double loglik = 0.0;  // log_likelihood(x, hmm, pi)
  std::size_t best_restart = 0;
  bool converged = false;
  std::uint64_t seed = 0;
  std::vector<RestartTrace> restarts;
};

/// Runs EM from a given starting point (no randomness).
std::pair<EmStep, RestartTrace> fit_from(std::span<const Symbol> x, const Hmm& init, std::span<const double> init_pi,
                                         double delta, std::size_t max_iter, double tol);

/// Random H_delta initialization used by restart `index`.
Hmm random_initial_hmm(const HDeltaSpec& spec, double dwell_hint, Rng& rng);

/// Best-of-restarts estimate; restart r uses Rng(seed ^ r). Ties in
/// log-likelihood go to the lowest restart index.
FitResult fit(std::span<const Symbol> x, const HDeltaSpec& spec, const FitOptions& options);

/// d*(H1, H2) = max over all transition and emission coordinates t of
/// |log2(v_t(H1) / v_t(H2))|. Throws std::invalid_argument on a zero entry.
double dstar_distance(const Hmm& a, const Hmm& b);
/// Same metric on raw parameter vectors (no stochasticity required).
double dstar_distance(std::span<const double> a, std::span<const double> b);
/// (p row-major, then emissions row-major): k^2 + k|X| coordinates.
std::vector<double> parameter_vector(const Hmm& h);

/// Assignment of fitted states to true sources minimizing the summed TV
/// distance between emissions (exhaustive over permutations).
struct StateMatching {
  std::vector<std::size_t> source_of_state;
  std::vector<double> tv;  // per fitted state, distance to its matched source
  double total = 0.0;
};

StateMatching match_states(const Hmm& fitted, std::span<const Distribution> sources);

}  // namespace hmmres
