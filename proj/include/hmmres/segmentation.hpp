#pragma once

// Sliding-window classification of a sample to known (or estimated) sources.
//
// Window i covers x[i .. i+l-1] and gets the source with the largest window
// log-likelihood, ties going to the lowest source index. The last l-1
// indices, which start no full window, inherit the label of the last window.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "hmmres/prob.hpp"
#include "hmmres/second_moment.hpp"

namespace hmmres {

struct Segmentation {
  std::vector<std::size_t> labels;  // 0-based source per index, |x| entries
  std::size_t window = 0;
  /// scores(i, j) = sum_{t=i}^{i+l-1} log2 mu_j(x_t); -inf on a zero.
  /// One row per full window (|x| - l + 1 rows).
  Matrix scores;
};

/// Throws std::invalid_argument if l == 0, l > |x|, sources is empty or the
/// alphabets differ.
Segmentation sliding_window_classify(std::span<const Symbol> x, std::span<const Distribution> sources, std::size_t l);

/// Hoeffding bound on P(source j scores at least source i on an l-window
/// drawn from i). With D = D(mu_i | mu_j) and R the range of
/// log2(mu_i(a)/mu_j(a)) over supp mu_i, this is exp(-2 l D^2 / R^2). When mu_j
/// vanishes somewhere on supp mu_i the bound is mu_i(S)^l, S the symbols that
/// keep the score of j finite.
double window_error_bound(const Distribution& mu_i, const Distribution& mu_j, std::size_t l);

/// Smallest l with window_error_bound <= 1 - confidence for every ordered pair
/// of sources. Throws std::invalid_argument for k < 2, confidence outside
/// (0, 1), or two sources that cannot be told apart.
std::size_t choose_window(std::span<const Distribution> sources, double confidence);

struct SegmentationMetrics {
  double accuracy = 0.0;
  std::vector<std::optional<double>> recall;  // per source; empty when absent from the truth
  double boundary_excluded_accuracy = 0.0;     // indices more than l from every true change point
  std::size_t boundary_excluded_count = 0;
  std::vector<std::size_t> true_change_points;  // i with truth[i] != truth[i-1]
  /// Signed offset from each true change point to the nearest predicted one;
  /// nullopt when the prediction has no change point.
  std::vector<std::optional<long long>> change_point_offsets;
};

/// `k` sizes the recall vector. Throws std::invalid_argument on length
/// mismatch or a label >= k.
SegmentationMetrics segmentation_accuracy(const Segmentation& pred, std::span<const std::size_t> truth, std::size_t k);

}  // namespace hmmres
