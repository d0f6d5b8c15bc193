#pragma once

// Interval Models: a sequence of consecutive intervals, each assigned one of k
// source distributions, every interval at least m long. Observations are
// independent, position i drawn from the source of the interval containing i.
//
// Positions are 0-based: position i is the 1-based index i+1 of the usual
// mathematical notation. Interval and source indices are 0-based as well; the
// file formats (see io.hpp) write them 1-based.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hmmres/prob.hpp"
#include "hmmres/second_moment.hpp"

namespace hmmres {

enum class ScheduleKind { fixed_length, random_length, alternating, doubling_nonergodic, explicit_list };

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& name);

/// Generator description for an interval schedule.
///   fixed_length:        every interval has `length`; sources cycle 0,1,..,k-1.
///   random_length:       lengths uniform in [min_length, max_length]; each
///                        interval picks a source uniformly among those
///                        different from the previous one (k >= 2).
///   alternating:         lengths cycle through `lengths`; sources cycle.
///   doubling_nonergodic: lengths m*2^0, m*2^1, ...; sources alternate 0,1.
///   explicit_list:       `ends` (1-based inclusive interval ends) and `tau`.
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::fixed_length;
  std::size_t length = 0;
  std::size_t min_length = 0;
  std::size_t max_length = 0;
  std::vector<std::size_t> lengths;
  std::vector<std::size_t> ends;
  std::vector<std::size_t> tau;
  std::size_t horizon = 0;
};

class IntervalModel {
 public:
  /// `ends[l]` is the exclusive end position of interval l, so interval l
  /// covers [ends[l-1], ends[l]). The last interval may extend past the
  /// horizon; it is stored at full length. Throws std::invalid_argument on
  /// any violated invariant (m > 2, every length >= m, tau in range, the
  /// intervals cover the horizon, sources share one alphabet).
  IntervalModel(std::vector<Distribution> sources, std::vector<std::size_t> ends, std::vector<std::size_t> tau,
                std::size_t m, std::size_t horizon);

  std::size_t k() const { return sources_.size(); }
  std::size_t m() const { return m_; }
  std::size_t horizon() const { return horizon_; }
  const AlphabetPtr& alphabet() const { return sources_.front().alphabet(); }
  const std::vector<Distribution>& sources() const { return sources_; }
  const Distribution& source(std::size_t j) const { return sources_.at(j); }

  std::size_t interval_count() const { return ends_.size(); }
  std::size_t interval_begin(std::size_t l) const { return l == 0 ? 0 : ends_.at(l - 1); }
  std::size_t interval_end(std::size_t l) const { return ends_.at(l); }
  std::size_t interval_length(std::size_t l) const { return interval_end(l) - interval_begin(l); }
  std::size_t tau(std::size_t l) const { return tau_.at(l); }
  const std::vector<std::size_t>& ends() const { return ends_; }
  const std::vector<std::size_t>& taus() const { return tau_; }

  /// Source index of position i (0-based).
  std::size_t kappa(std::size_t i) const;
  /// kappa(0..n-1).
  std::vector<std::size_t> labels(std::size_t n) const;
  /// Positions where a new interval with a different source begins, < n.
  std::vector<std::size_t> change_points(std::size_t n) const;

 private:
  std::vector<Distribution> sources_;
  std::vector<std::size_t> ends_;
  std::vector<std::size_t> tau_;
  std::size_t m_;
  std::size_t horizon_;
};

/// Throws std::invalid_argument if any requested length is < m.
IntervalModel build_schedule(const ScheduleSpec& spec, std::vector<Distribution> sources, std::size_t m, Rng& rng);

struct LabeledSample {
  Sequence x;
  std::vector<std::size_t> kappa;
  std::uint64_t seed = 0;
};

/// Draws x_0..x_{length-1} independently, x_i ~ source(kappa(i)).
/// Throws std::invalid_argument when length exceeds the horizon.
LabeledSample sample(const IntervalModel& model, std::size_t length, Rng& rng);

/// w_j(N) = |{i < N : kappa(i) = j}| / N.
std::vector<double> weights(const IntervalModel& model, std::size_t n);

/// min_j w_j(N) * N.
double n_min(const IntervalModel& model, std::size_t n);

/// c_rl = |{i < N : kappa(i) = r, kappa(i+1) = l}|; needs horizon >= N+1.
Eigen::MatrixX<long long> transition_counts(const IntervalModel& model, std::size_t n);

/// Expected second moment of X_0..X_N and its pure / mixed split:
///   total = (1/N) sum_rl c_rl mu_r (x) mu_l
///   pure  = sum_j (c_jj / N) mu_j (x) mu_j
///   mixed = total - pure   (un-halved L1 mass <= 1/m)
struct ExpectedMoment {
  SecondMoment total;
  Matrix pure;
  Matrix mixed;
  std::vector<double> pure_weights;
};

/// The moment is taken over a sample of length N+1 (N pairs).
ExpectedMoment expected_moment(const IntervalModel& model, std::size_t n);

}  // namespace hmmres
