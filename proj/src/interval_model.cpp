#include "hmmres/interval_model.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace hmmres {

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::fixed_length: return "fixed_length";
    case ScheduleKind::random_length: return "random_length";
    case ScheduleKind::alternating: return "alternating";
    case ScheduleKind::doubling_nonergodic: return "doubling_nonergodic";
    case ScheduleKind::explicit_list: return "explicit";
  }
  return "unknown";
}

ScheduleKind schedule_kind_from_string(const std::string& name) {
  if (name == "fixed_length") return ScheduleKind::fixed_length;
  if (name == "random_length") return ScheduleKind::random_length;
  if (name == "alternating") return ScheduleKind::alternating;
  if (name == "doubling_nonergodic") return ScheduleKind::doubling_nonergodic;
  if (name == "explicit") return ScheduleKind::explicit_list;
  throw std::invalid_argument("unknown schedule kind '" + name + "'");
}

IntervalModel::IntervalModel(std::vector<Distribution> sources, std::vector<std::size_t> ends,
                             std::vector<std::size_t> tau, std::size_t m, std::size_t horizon)
    : sources_(std::move(sources)), ends_(std::move(ends)), tau_(std::move(tau)), m_(m), horizon_(horizon) {
  if (sources_.empty()) throw std::invalid_argument("interval model needs at least one source");
  for (const auto& s : sources_) require_same_alphabet(sources_.front().alphabet(), s.alphabet());
  if (m_ <= 2) throw std::invalid_argument("interval model requires m > 2");
  if (ends_.empty()) throw std::invalid_argument("interval model needs at least one interval");
  if (ends_.size() != tau_.size()) throw std::invalid_argument("one source assignment per interval required");
  std::size_t begin = 0;
  for (std::size_t l = 0; l < ends_.size(); ++l) {
    if (ends_[l] <= begin || ends_[l] - begin < m_)
      throw std::invalid_argument("interval " + std::to_string(l + 1) + " is shorter than m");
    if (tau_[l] >= sources_.size()) throw std::invalid_argument("source assignment out of range");
    begin = ends_[l];
  }
  if (horizon_ == 0 || ends_.back() < horizon_) throw std::invalid_argument("intervals do not cover the horizon");
}

std::size_t IntervalModel::kappa(std::size_t i) const {
  if (i >= ends_.back()) throw std::out_of_range("position beyond the last interval");
  const auto it = std::upper_bound(ends_.begin(), ends_.end(), i);
  return tau_[static_cast<std::size_t>(it - ends_.begin())];
}

std::vector<std::size_t> IntervalModel::labels(std::size_t n) const {
  if (n > ends_.back()) throw std::out_of_range("labels requested beyond the last interval");
  std::vector<std::size_t> out;
  out.reserve(n);
  for (std::size_t l = 0; l < ends_.size() && out.size() < n; ++l) {
    const std::size_t stop = std::min(ends_[l], n);
    out.insert(out.end(), stop - out.size(), tau_[l]);
  }
  return out;
}

std::vector<std::size_t> IntervalModel::change_points(std::size_t n) const {
  std::vector<std::size_t> out;
  for (std::size_t l = 1; l < ends_.size(); ++l) {
    const std::size_t b = ends_[l - 1];
    if (b >= n) break;
    if (tau_[l] != tau_[l - 1]) out.push_back(b);
  }
  return out;
}

namespace {

void require_at_least_m(std::size_t length, std::size_t m) {
  if (length < m)
    throw std::invalid_argument("requested interval length " + std::to_string(length) + " is below m=" +
                                std::to_string(m));
}

}  // namespace

IntervalModel build_schedule(const ScheduleSpec& spec, std::vector<Distribution> sources, std::size_t m, Rng& rng) {
  const std::size_t k = sources.size();
  if (k == 0) throw std::invalid_argument("build_schedule: no sources");
  if (m <= 2) throw std::invalid_argument("build_schedule: m must exceed 2");

  std::vector<std::size_t> ends;
  std::vector<std::size_t> tau;
  std::size_t horizon = spec.horizon;

  auto push = [&](std::size_t length, std::size_t source) {
    const std::size_t begin = ends.empty() ? 0 : ends.back();
    ends.push_back(begin + length);
    tau.push_back(source);
  };
  auto covered = [&] { return !ends.empty() && ends.back() >= horizon; };

  if (spec.kind != ScheduleKind::explicit_list && horizon == 0)
    throw std::invalid_argument("build_schedule: horizon must be positive");

  switch (spec.kind) {
    case ScheduleKind::fixed_length: {
      const std::size_t length = spec.length == 0 ? m : spec.length;
      require_at_least_m(length, m);
      for (std::size_t l = 0; !covered(); ++l) push(length, l % k);
      break;
    }
    case ScheduleKind::random_length: {
      const std::size_t lo = spec.min_length == 0 ? m : spec.min_length;
      const std::size_t hi = spec.max_length == 0 ? lo : spec.max_length;
      require_at_least_m(lo, m);
      if (hi < lo) throw std::invalid_argument("random_length: max_length < min_length");
      std::size_t previous = 0;
      for (std::size_t l = 0; !covered(); ++l) {
        const auto length = static_cast<std::size_t>(rng.uniform_int(lo, hi));
        std::size_t source = 0;
        if (k > 1) {
          if (l == 0) {
            source = static_cast<std::size_t>(rng.uniform_int(0, k - 1));
          } else {
            // Uniform over the k-1 sources other than the previous one.
            source = static_cast<std::size_t>(rng.uniform_int(0, k - 2));
            if (source >= previous) ++source;
          }
        }
        push(length, source);
        previous = source;
      }
      break;
    }
    case ScheduleKind::alternating: {
      if (spec.lengths.empty()) throw std::invalid_argument("alternating: lengths list is empty");
      for (std::size_t len : spec.lengths) require_at_least_m(len, m);
      for (std::size_t l = 0; !covered(); ++l) push(spec.lengths[l % spec.lengths.size()], l % k);
      break;
    }
    case ScheduleKind::doubling_nonergodic: {
      if (k < 2) throw std::invalid_argument("doubling_nonergodic needs at least two sources");
      std::size_t length = m;
      for (std::size_t l = 0; !covered(); ++l) {
        push(length, l % 2);
        if (length > std::numeric_limits<std::size_t>::max() / 4) throw std::overflow_error("doubling schedule overflow");
        length *= 2;
      }
      break;
    }
    case ScheduleKind::explicit_list: {
      if (spec.ends.empty() || spec.ends.size() != spec.tau.size())
        throw std::invalid_argument("explicit schedule needs matching ends and tau lists");
      std::size_t begin = 0;
      for (std::size_t l = 0; l < spec.ends.size(); ++l) {
        if (spec.ends[l] <= begin) throw std::invalid_argument("explicit ends must be strictly increasing");
        require_at_least_m(spec.ends[l] - begin, m);
        push(spec.ends[l] - begin, spec.tau[l]);
        begin = spec.ends[l];
      }
      if (horizon == 0) horizon = ends.back();
      break;
    }
  }
  return {std::move(sources), std::move(ends), std::move(tau), m, horizon};
}

LabeledSample sample(const IntervalModel& model, std::size_t length, Rng& rng) {
  if (length > model.horizon()) throw std::invalid_argument("sample length exceeds the model horizon");
  LabeledSample out;
  out.seed = rng.seed();
  out.kappa = model.labels(length);
  out.x.resize(length);
  for (std::size_t i = 0; i < length; ++i) out.x[i] = sample_categorical(model.source(out.kappa[i]), rng);
  return out;
}

std::vector<double> weights(const IntervalModel& model, std::size_t n) {
  if (n == 0) throw std::invalid_argument("weights: N must be positive");
  std::vector<double> w(model.k(), 0.0);
  std::size_t begin = 0;
  for (std::size_t l = 0; l < model.interval_count() && begin < n; ++l) {
    const std::size_t end = std::min(model.interval_end(l), n);
    w[model.tau(l)] += static_cast<double>(end - begin);
    begin = end;
  }
  if (begin < n) throw std::out_of_range("weights: N beyond the last interval");
  for (double& x : w) x /= static_cast<double>(n);
  return w;
}

double n_min(const IntervalModel& model, std::size_t n) {
  const auto w = weights(model, n);
  return *std::min_element(w.begin(), w.end()) * static_cast<double>(n);
}

Eigen::MatrixX<long long> transition_counts(const IntervalModel& model, std::size_t n) {
  if (n + 1 > model.horizon()) throw std::out_of_range("transition_counts needs horizon >= N+1");
  const auto k = static_cast<Eigen::Index>(model.k());
  Eigen::MatrixX<long long> c = Eigen::MatrixX<long long>::Zero(k, k);
  // Walk the intervals: within an interval every pair is a self transition,
  // each boundary contributes one cross transition.
  std::size_t begin = 0;
  for (std::size_t l = 0; l < model.interval_count() && begin < n; ++l) {
    const std::size_t end = model.interval_end(l);
    const auto r = static_cast<Eigen::Index>(model.tau(l));
    // Pairs (i, i+1) with i in [begin, end-1) and i < n stay inside interval l.
    const std::size_t inner_stop = std::min(end - 1, n);
    if (inner_stop > begin) c(r, r) += static_cast<long long>(inner_stop - begin);
    if (end - 1 < n) {
      const auto next = static_cast<Eigen::Index>(model.tau(l + 1));
      ++c(r, next);
    }
    begin = end;
  }
  return c;
}

ExpectedMoment expected_moment(const IntervalModel& model, std::size_t n) {
  const auto c = transition_counts(model, n);
  const auto k = model.k();
  const auto dim = static_cast<Eigen::Index>(model.alphabet()->size());
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<Vector> mu;
  mu.reserve(k);
  for (const auto& s : model.sources()) mu.emplace_back(Eigen::Map<const Vector>(s.probs().data(), dim));

  Matrix total = Matrix::Zero(dim, dim);
  Matrix pure = Matrix::Zero(dim, dim);
  std::vector<double> pure_weights(k, 0.0);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t l = 0; l < k; ++l) {
      const auto count = c(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(l));
      if (count == 0) continue;
      const double u = static_cast<double>(count) * inv_n;
      const Matrix term = u * mu[r] * mu[l].transpose();
      total += term;
      if (r == l) {
        pure += term;
        pure_weights[r] = u;
      }
    }
  }
  Matrix mixed = total - pure;
  return {SecondMoment(model.alphabet(), std::move(total)), std::move(pure), std::move(mixed), std::move(pure_weights)};
}

}  // namespace hmmres
