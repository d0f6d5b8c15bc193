#include "hmmres/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace hmmres {

namespace {

using Eigen::Index;

std::vector<std::size_t> changes_of(std::span<const std::size_t> labels) {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i < labels.size(); ++i)
    if (labels[i] != labels[i - 1]) out.push_back(i);
  return out;
}

}  // namespace

Segmentation sliding_window_classify(std::span<const Symbol> x, std::span<const Distribution> sources, std::size_t l) {
  if (sources.empty()) throw std::invalid_argument("sliding_window_classify: no sources");
  if (l == 0 || l > x.size()) throw std::invalid_argument("sliding_window_classify: window must lie in [1, |x|]");
  for (const auto& s : sources) require_same_alphabet(s.alphabet(), sources[0].alphabet());
  const std::size_t k = sources.size();
  const std::size_t nx = sources[0].size();
  for (Symbol s : x)
    if (s >= nx) throw std::invalid_argument("sliding_window_classify: symbol outside the alphabet");

  // Prefix sums of finite log-probabilities and of zero hits, per source.
  const std::size_t n = x.size();
  std::vector<double> logsum((n + 1) * k, 0.0);
  std::vector<std::size_t> zeros((n + 1) * k, 0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      const double p = sources[j][x[t]];
      logsum[(t + 1) * k + j] = logsum[t * k + j] + (p > 0.0 ? std::log2(p) : 0.0);
      zeros[(t + 1) * k + j] = zeros[t * k + j] + (p > 0.0 ? 0 : 1);
    }
  }

  Segmentation seg;
  seg.window = l;
  const std::size_t windows = n - l + 1;
  seg.scores.resize(static_cast<Index>(windows), static_cast<Index>(k));
  seg.labels.assign(n, 0);
  for (std::size_t i = 0; i < windows; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const bool impossible = zeros[(i + l) * k + j] > zeros[i * k + j];
      const double score = impossible ? -kInfinity : logsum[(i + l) * k + j] - logsum[i * k + j];
      seg.scores(static_cast<Index>(i), static_cast<Index>(j)) = score;
      if (score > seg.scores(static_cast<Index>(i), static_cast<Index>(best))) best = j;
    }
    seg.labels[i] = best;
  }
  for (std::size_t i = windows; i < n; ++i) seg.labels[i] = seg.labels[windows - 1];
  return seg;
}

double window_error_bound(const Distribution& mu_i, const Distribution& mu_j, std::size_t l) {
  require_same_alphabet(mu_i.alphabet(), mu_j.alphabet());
  double shared = 0.0;
  double lo = kInfinity;
  double hi = -kInfinity;
  for (Symbol a = 0; a < mu_i.size(); ++a) {
    if (mu_i[a] <= 0.0) continue;
    if (mu_j[a] <= 0.0) continue;
    shared += mu_i[a];
    const double r = std::log2(mu_i[a] / mu_j[a]);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  const double ld = static_cast<double>(l);
  if (shared < 1.0 - 1e-15) return std::pow(shared, ld);
  const double d = kl_divergence(mu_i, mu_j);
  if (d <= 0.0) return 1.0;
  const double range = hi - lo;
  if (range <= 0.0) return 0.0;  // constant positive log-ratio: j never wins
  return std::exp(-2.0 * ld * d * d / (range * range));
}

std::size_t choose_window(std::span<const Distribution> sources, double confidence) {
  if (sources.size() < 2) throw std::invalid_argument("choose_window: need at least two sources");
  if (!(confidence > 0.0 && confidence < 1.0)) throw std::invalid_argument("choose_window: confidence must lie in (0, 1)");
  const double target = 1.0 - confidence;
  std::size_t l = 1;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    for (std::size_t j = 0; j < sources.size(); ++j) {
      if (i == j) continue;
      if (window_error_bound(sources[i], sources[j], 1) >= 1.0)
        throw std::invalid_argument("choose_window: sources " + std::to_string(i + 1) + " and " +
                                    std::to_string(j + 1) + " are indistinguishable");
      // Geometric in l: closed form, then fix the rounding.
      const double b1 = window_error_bound(sources[i], sources[j], 1);
      std::size_t guess = 1;
      if (b1 > target) guess = static_cast<std::size_t>(std::max(1.0, std::floor(std::log(target) / std::log(b1))));
      while (guess > 1 && window_error_bound(sources[i], sources[j], guess - 1) <= target) --guess;
      while (window_error_bound(sources[i], sources[j], guess) > target) ++guess;
      l = std::max(l, guess);
    }
  }
  return l;
}

SegmentationMetrics segmentation_accuracy(const Segmentation& pred, std::span<const std::size_t> truth, std::size_t k) {
  if (pred.labels.size() != truth.size()) throw std::invalid_argument("segmentation_accuracy: length mismatch");
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (truth[i] >= k || pred.labels[i] >= k) throw std::invalid_argument("segmentation_accuracy: label out of range");
  SegmentationMetrics out;
  const std::size_t n = truth.size();
  std::vector<std::size_t> hits(k, 0), present(k, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ++present[truth[i]];
    if (pred.labels[i] == truth[i]) {
      ++correct;
      ++hits[truth[i]];
    }
  }
  out.accuracy = n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n);
  out.recall.resize(k);
  for (std::size_t j = 0; j < k; ++j)
    if (present[j] > 0) out.recall[j] = static_cast<double>(hits[j]) / static_cast<double>(present[j]);

  out.true_change_points = changes_of(truth);
  const std::size_t l = pred.window;
  std::size_t next = 0;  // first true change point >= i - l
  std::size_t kept = 0, kept_correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& cps = out.true_change_points;
    while (next < cps.size() && cps[next] + l < i) ++next;
    const bool near = next < cps.size() && cps[next] <= i + l;
    if (near) continue;
    ++kept;
    kept_correct += pred.labels[i] == truth[i] ? 1 : 0;
  }
  out.boundary_excluded_count = kept;
  out.boundary_excluded_accuracy = kept == 0 ? 0.0 : static_cast<double>(kept_correct) / static_cast<double>(kept);

  const auto predicted = changes_of(pred.labels);
  for (std::size_t c : out.true_change_points) {
    if (predicted.empty()) {
      out.change_point_offsets.emplace_back();
      continue;
    }
    long long best = 0;
    bool first = true;
    for (std::size_t p : predicted) {
      const long long off = static_cast<long long>(p) - static_cast<long long>(c);
      if (first || std::llabs(off) < std::llabs(best)) best = off;
      first = false;
    }
    out.change_point_offsets.emplace_back(best);
  }
  return out;
}

}  // namespace hmmres
