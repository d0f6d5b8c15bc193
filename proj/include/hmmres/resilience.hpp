#pragma once

// Resilience of maximum-likelihood HMMs on Interval Model data.
//
// D(H) = inf_{phi in P} ||M_ref - M_{phi,H}||_TV - 3/m, where P holds the
// proper systems phi with ||d_phi - left_marginal(M_ref)||_TV <= 3/m. It is
// computed exactly as a linear program. The bound on D(H) for a maximum
// likelihood estimate is sqrt(log2(3km) / m).
//
// The *_check functions are seeded desk-scale experiments that evaluate the
// likelihood and moment inequalities on simulated samples. Each seed draws
// its sample from Rng(seed); records are returned in seed order.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "hmmres/estimation.hpp"
#include "hmmres/hmm.hpp"
#include "hmmres/interval_model.hpp"
#include "hmmres/lp.hpp"
#include "hmmres/moments.hpp"

namespace hmmres {

struct DhResult {
  double raw = 0.0;        // inf TV - 3/m
  double clamped = 0.0;    // max(raw, 0)
  double infimum = 0.0;    // inf over P of the TV distance
  double slack = 0.0;      // 3/m
  std::optional<ProperSystem> argmin_phi;
  LpStatus status = LpStatus::iteration_limit;
  double certificate = 0.0;  // max(duality gap, primal residual, dual infeasibility)
  int iterations = 0;
};

/// Exact D(H) against a reference moment (M_X or an empirical M(x)).
/// Throws std::runtime_error if the solver does not reach a certified optimum
/// within `tol`.
DhResult dh(const SecondMoment& m_ref, const Hmm& h, std::size_t m, double tol = 1e-8);

/// ||M_ref - M_{phi,H}||_TV for a given system (the LP objective).
double dh_objective(const SecondMoment& m_ref, const Hmm& h, const Matrix& phi);
/// ||d_phi - left_marginal(M_ref)||_TV (the P constraint, compare with 3/m).
double dh_marginal_gap(const SecondMoment& m_ref, const Matrix& phi);

/// sqrt(log2(3km) / m).
double theorem_bound(std::size_t k, std::size_t m);

/// -log2(2km)/m - sum_j w_j H(mu_j) - eps.
double lemma2_threshold(std::size_t k, std::size_t m, std::span<const double> w,
                        std::span<const Distribution> sources, double eps);

/// sum_j w_j H(mu_j), the entropy rate of the model over the first N indices.
double entropy_rate(const IntervalModel& model, std::size_t n);

// ---------------------------------------------------------------------------
// Likelihood lower bound for the reference HMM.

struct Lemma2Record {
  std::uint64_t seed = 0;
  double loglik = 0.0;     // L(x, reference_hmm, point mass on kappa(0)), |x| = N
  double threshold = 0.0;
  double margin = 0.0;     // loglik - threshold
  bool pass = false;
};

struct Lemma2Report {
  std::vector<Lemma2Record> records;
  double eps_tol = 0.0;
  double pass_rate = 0.0;
};

Lemma2Report lemma2_check(const IntervalModel& model, std::size_t n, std::span<const std::uint64_t> seeds,
                          double eps_tol, int jobs = 1);

// ---------------------------------------------------------------------------
// Concentration of the empirical second moment around M_X.

struct ConcentrationRecord {
  std::uint64_t seed = 0;
  double tv = 0.0;          // ||M(x) - M_X||_TV, |x| = N + 1
  bool within_u = false;    // tv <= 3/m
  /// max over sources j and pair parities t of ||R_{j,t}||_TV, where R_{j,t}
  /// compares mu_j (x) mu_j with the empirical law of the disjoint pairs
  /// (i, i+1) inside source j starting at even (t = 0) or odd (t = 1) i.
  double pure_pair_deviation = 0.0;
  std::vector<bool> within_eps;  // tv <= eps + 2/m for each grid eps
};

struct ConcentrationReport {
  std::vector<ConcentrationRecord> records;
  std::vector<double> eps_grid;
  double radius = 0.0;  // 3/m
  double fraction_within_u = 0.0;
  std::vector<double> fraction_within_eps;
};

ConcentrationReport moment_concentration_check(const IntervalModel& model, std::size_t n,
                                               std::span<const std::uint64_t> seeds,
                                               std::vector<double> eps_grid = {0.01, 0.02, 0.05, 0.1}, int jobs = 1);

// ---------------------------------------------------------------------------
// Asymptotic equipartition of the sample probability.

struct AepRecord {
  std::uint64_t seed = 0;
  double neg_log_prob_rate = 0.0;  // -(1/N) log2 P_X(x)
  double entropy_rate = 0.0;       // sum_j w_j H(mu_j)
  double deviation = 0.0;
  bool pass = false;               // |deviation| <= eps_tol
};

struct AepReport {
  std::vector<AepRecord> records;
  double eps_tol = 0.0;
  double pass_rate = 0.0;
};

AepReport aep_check(const IntervalModel& model, std::size_t n, std::span<const std::uint64_t> seeds, double eps_tol,
                    int jobs = 1);

// ---------------------------------------------------------------------------
// Exact probability of the moment neighbourhood under an HMM, by enumeration
// of the unfolded chain. A finite-N sanity comparison with 2^{-N D^2}.

struct SanovReport {
  std::size_t n_small = 0;
  double probability = 0.0;   // P_H(||M(x) - M_X||_TV <= 3/m), |x| = n_small + 1
  double total_mass = 0.0;    // enumeration total (1 up to rounding)
  double d_raw = 0.0;
  double d_clamped = 0.0;
  double bound = 0.0;         // 2^{-n_small * D^2}
  bool satisfied = false;
};

/// Guard: k^(n_small+1) <= 1e7 and (k|X|)^(n_small+1) <= 1e8.
SanovReport sanov_check(const Hmm& h, std::span<const double> pi, const IntervalModel& model, std::size_t n_small);

// ---------------------------------------------------------------------------
// Maximum-likelihood fit versus the resilience bound.

struct Theorem2Record {
  std::uint64_t seed = 0;
  double loglik_fit = 0.0;
  double loglik_reference = 0.0;
  double d_model_raw = 0.0;
  double d_model = 0.0;          // clamped, against M_X
  double d_empirical_raw = 0.0;
  double d_empirical = 0.0;      // clamped, against M(x)
  double bound = 0.0;
  bool satisfied = false;        // d_model <= bound
  bool excluded = false;         // reference HMM out-scored the fit
  double emission_tv = 0.0;      // worst matched TV between fitted and true emissions
  double likelihood_upper = 0.0; // -d_model^2 - sum w H(mu) (likelihood ceiling at eps = 0)
  std::size_t clip_events = 0;
  std::size_t monotonicity_violations = 0;
};

struct BoundReport {
  std::vector<Theorem2Record> records;
  double bound = 0.0;
  std::size_t evaluated = 0;  // non-excluded seeds
  std::size_t satisfied = 0;
  double pass_rate = 0.0;     // satisfied / evaluated
};

/// Seed used for the EM restarts of sampling seed `seed`.
std::uint64_t fit_seed_for(std::uint64_t seed);

BoundReport theorem2_experiment(const IntervalModel& model, std::size_t n, const HDeltaSpec& spec,
                                const FitOptions& options, std::span<const std::uint64_t> seeds, int jobs = 1);

struct SweepRecord {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  double d_model = 0.0;
  double running_max = 0.0;  // max d_model over n' <= n with n' >= burn-in; 0 before
  bool past_burn_in = false;
  bool satisfied = false;    // running_max <= bound (always true before burn-in)
  double w_first = 0.0;      // weight of source 0, shows the non-ergodic oscillation
};

struct SweepReport {
  std::vector<SweepRecord> records;
  double bound = 0.0;
  bool all_satisfied = false;
};

/// For every seed one sample of length 2^max_exp + 1 is drawn; the fit at N
/// uses its first N+1 symbols, for N = 2^min_exp, ..., 2^max_exp.
SweepReport corollary_sweep(const IntervalModel& model, unsigned min_exp, unsigned max_exp, unsigned burn_in_exp,
                            const HDeltaSpec& spec, const FitOptions& options, std::span<const std::uint64_t> seeds,
                            int jobs = 1);

}  // namespace hmmres
