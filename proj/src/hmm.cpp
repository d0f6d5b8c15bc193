#include "hmmres/hmm.hpp"

#include <cmath>
#include <stdexcept>

#include "hmmres/kernels.hpp"

namespace hmmres {

StateWeights uniform_initial(std::size_t k) {
  if (k == 0) throw std::invalid_argument("uniform_initial: k must be positive");
  return StateWeights(k, 1.0 / static_cast<double>(k));
}

StateWeights point_initial(std::size_t k, std::size_t state) {
  if (state >= k) throw std::invalid_argument("point_initial: state out of range");
  StateWeights pi(k, 0.0);
  pi[state] = 1.0;
  return pi;
}

void validate_initial(std::span<const double> pi, std::size_t k) {
  if (pi.size() != k) throw std::invalid_argument("initial distribution has the wrong number of states");
  double sum = 0.0;
  for (double v : pi) {
    if (!(v >= 0.0)) throw std::invalid_argument("initial distribution entries must be nonnegative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > Hmm::kRowTolerance) throw std::invalid_argument("initial distribution must sum to 1");
}

namespace {

void require_row_stochastic(const Matrix& m, const char* what) {
  if (!m.allFinite() || (m.array() < 0.0).any())
    throw std::invalid_argument(std::string(what) + " entries must be finite and nonnegative");
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    if (std::abs(m.row(r).sum() - 1.0) > Hmm::kRowTolerance)
      throw std::invalid_argument(std::string(what) + " rows must sum to 1");
}

void require_symbols(std::span<const Symbol> x, std::size_t alphabet_size) {
  for (Symbol s : x)
    if (s >= alphabet_size) throw std::out_of_range("symbol outside the HMM alphabet");
}

}  // namespace

Hmm::Hmm(AlphabetPtr alphabet, Matrix transition, Matrix emission)
    : alphabet_(std::move(alphabet)), transition_(std::move(transition)), emission_(std::move(emission)) {
  if (!alphabet_) throw std::invalid_argument("hmm without alphabet");
  if (transition_.rows() == 0 || transition_.rows() != transition_.cols())
    throw std::invalid_argument("transition matrix must be square and nonempty");
  if (emission_.rows() != transition_.rows() || emission_.cols() != static_cast<Eigen::Index>(alphabet_->size()))
    throw std::invalid_argument("emission matrix must be k x |X|");
  require_row_stochastic(transition_, "transition");
  require_row_stochastic(emission_, "emission");
}

namespace {

Matrix stack_emissions(std::span<const Distribution> emissions) {
  if (emissions.empty()) throw std::invalid_argument("hmm needs at least one emission distribution");
  const auto k = static_cast<Eigen::Index>(emissions.size());
  const auto n = static_cast<Eigen::Index>(emissions.front().size());
  Matrix e(k, n);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto& d = emissions[static_cast<std::size_t>(j)];
    require_same_alphabet(emissions.front().alphabet(), d.alphabet());
    for (Eigen::Index a = 0; a < n; ++a) e(j, a) = d[static_cast<Symbol>(a)];
  }
  return e;
}

}  // namespace

Hmm::Hmm(Matrix transition, std::span<const Distribution> emissions)
    : Hmm(emissions.empty() ? nullptr : emissions.front().alphabet(), std::move(transition),
          stack_emissions(emissions)) {}

Distribution Hmm::emission_distribution(std::size_t j) const {
  const auto row = emission_.row(static_cast<Eigen::Index>(j));
  return Distribution::normalized(alphabet_, std::vector<double>(row.begin(), row.end()));
}

Hmm Hmm::permuted(std::span<const std::size_t> perm) const {
  const auto k = static_cast<Eigen::Index>(this->k());
  if (static_cast<Eigen::Index>(perm.size()) != k) throw std::invalid_argument("permutation size mismatch");
  Matrix t(k, k);
  Matrix e(k, emission_.cols());
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto pi = static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]);
    e.row(pi) = emission_.row(i);
    for (Eigen::Index j = 0; j < k; ++j) t(pi, static_cast<Eigen::Index>(perm[static_cast<std::size_t>(j)])) = transition_(i, j);
  }
  return {alphabet_, std::move(t), std::move(e)};
}

double log_likelihood(std::span<const Symbol> x, const Hmm& h, std::span<const double> pi) {
  if (x.empty()) throw std::invalid_argument("log_likelihood: empty sequence");
  validate_initial(pi, h.k());
  require_symbols(x, h.alphabet_size());
  const auto k = static_cast<Eigen::Index>(h.k());
  const Matrix& p = h.transition();
  const Matrix& e = h.emission();

  Vector alpha(k);
  for (Eigen::Index j = 0; j < k; ++j) alpha(j) = pi[static_cast<std::size_t>(j)] * e(j, x[0]);
  double scale = alpha.sum();
  if (!(scale > 0.0)) return -kInfinity;
  double log_total = std::log2(scale);
  alpha /= scale;

  Vector next(k);
  for (std::size_t t = 1; t < x.size(); ++t) {
    next.noalias() = p.transpose() * alpha;
    next.array() *= e.col(x[t]).array();
    scale = next.sum();
    if (!(scale > 0.0)) return -kInfinity;
    log_total += std::log2(scale);
    alpha = next / scale;
  }
  return log_total / static_cast<double>(x.size());
}

double brute_force_likelihood(std::span<const Symbol> x, const Hmm& h, std::span<const double> pi) {
  if (x.empty()) throw std::invalid_argument("brute_force_likelihood: empty sequence");
  validate_initial(pi, h.k());
  require_symbols(x, h.alphabet_size());
  if (std::pow(static_cast<double>(h.k()), static_cast<double>(x.size())) > kBruteForceLimit)
    throw std::length_error("brute_force_likelihood: k^|x| exceeds the enumeration guard");
  const double total = kernels::omp::path_sum(x, h, pi);
  if (!(total > 0.0)) return -kInfinity;
  return std::log2(total) / static_cast<double>(x.size());
}

std::pair<Hmm, StateWeights> reference_hmm(std::span<const Distribution> sources, std::size_t m) {
  if (sources.empty()) throw std::invalid_argument("reference_hmm: no sources");
  if (m <= 2) throw std::invalid_argument("reference_hmm: m must exceed 2");
  const auto k = static_cast<Eigen::Index>(sources.size());
  Matrix p(k, k);
  if (k == 1) {
    p(0, 0) = 1.0;
  } else {
    const double md = static_cast<double>(m);
    const double stay = 1.0 - 1.0 / md;
    const double move = 1.0 / (static_cast<double>(k - 1) * md);
    p.setConstant(move);
    p.diagonal().setConstant(stay);
  }
  return {Hmm(std::move(p), sources), uniform_initial(sources.size())};
}

double single_path_loglik(std::span<const Symbol> x, const Hmm& h, std::span<const double> pi,
                          std::span<const std::size_t> path) {
  if (x.size() < 2) throw std::invalid_argument("single_path_loglik needs |x| >= 2");
  if (path.size() != x.size()) throw std::invalid_argument("single_path_loglik: path length must equal |x|");
  validate_initial(pi, h.k());
  require_symbols(x, h.alphabet_size());
  for (std::size_t s : path)
    if (s >= h.k()) throw std::out_of_range("path state out of range");

  auto add = [](double& acc, double prob) {
    if (!(prob > 0.0)) return false;
    acc += std::log2(prob);
    return true;
  };
  double total = 0.0;
  if (!add(total, pi[path[0]])) return -kInfinity;
  for (std::size_t i = 0; i + 1 < path.size(); ++i)
    if (!add(total, h.p(path[i], path[i + 1]))) return -kInfinity;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!add(total, h.nu(path[i], x[i]))) return -kInfinity;
  return total / static_cast<double>(x.size() - 1);
}

std::vector<double> UnfoldedChain::initial(const Hmm& h, std::span<const double> pi) const {
  validate_initial(pi, h.k());
  std::vector<double> out(size());
  for (std::size_t i = 0; i < k; ++i)
    for (Symbol a = 0; a < alphabet->size(); ++a) out[index(i, a)] = pi[i] * h.nu(i, a);
  return out;
}

UnfoldedChain unfold(const Hmm& h) {
  const std::size_t k = h.k();
  const std::size_t n = h.alphabet_size();
  UnfoldedChain chain{k, h.alphabet(), Matrix(static_cast<Eigen::Index>(k * n), static_cast<Eigen::Index>(k * n))};
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t j = 0; j < k; ++j)
        for (std::size_t b = 0; b < n; ++b)
          chain.transition(static_cast<Eigen::Index>(i * n + a), static_cast<Eigen::Index>(j * n + b)) =
              h.p(i, j) * h.nu(j, static_cast<Symbol>(b));
  return chain;
}

PairMeasure::PairMeasure(std::size_t k, AlphabetPtr alphabet, Matrix matrix)
    : k_(k), alphabet_(std::move(alphabet)), matrix_(std::move(matrix)) {
  if (!alphabet_ || k_ == 0) throw std::invalid_argument("pair measure needs k > 0 and an alphabet");
  const auto n = static_cast<Eigen::Index>(k_ * alphabet_->size());
  if (matrix_.rows() != n || matrix_.cols() != n) throw std::invalid_argument("pair measure must be |S'| x |S'|");
  if (!matrix_.allFinite() || (matrix_.array() < 0.0).any())
    throw std::invalid_argument("pair measure entries must be nonnegative");
  if (std::abs(matrix_.sum() - 1.0) > SecondMoment::kSumTolerance)
    throw std::invalid_argument("pair measure entries must sum to 1");
  stationary_ = (left_marginal() - right_marginal()).cwiseAbs().maxCoeff() <= kStationaryTolerance;
}

PairMeasure path_second_moment(std::span<const std::size_t> path, std::size_t k, const AlphabetPtr& alphabet) {
  if (path.size() < 2) throw std::invalid_argument("path_second_moment needs a path of length >= 2");
  const std::size_t n = k * alphabet->size();
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (path[i] >= n || path[i + 1] >= n) throw std::out_of_range("path state outside S'");
    m(static_cast<Eigen::Index>(path[i]), static_cast<Eigen::Index>(path[i + 1])) += 1.0;
  }
  m /= static_cast<double>(path.size() - 1);
  return {k, alphabet, std::move(m)};
}

SecondMoment project_T(const PairMeasure& mp) {
  const auto n = static_cast<Eigen::Index>(mp.alphabet()->size());
  const auto k = static_cast<Eigen::Index>(mp.k());
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) out += mp.matrix().block(i * n, j * n, n, n);
  return {mp.alphabet(), std::move(out)};
}

double markov_divergence(const PairMeasure& m, const UnfoldedChain& chain) {
  if (m.matrix().rows() != chain.transition.rows()) throw std::invalid_argument("markov_divergence: size mismatch");
  const Vector left = m.left_marginal();
  double d = 0.0;
  for (Eigen::Index u = 0; u < m.matrix().rows(); ++u) {
    for (Eigen::Index v = 0; v < m.matrix().cols(); ++v) {
      const double mass = m.matrix()(u, v);
      if (mass <= 0.0) continue;
      const double z = left(u) * chain.transition(u, v);
      if (z <= 0.0) return kInfinity;
      d += mass * std::log2(mass / z);
    }
  }
  return d < 0.0 ? 0.0 : d;
}

double kl_divergence(const PairMeasure& a, const PairMeasure& b) {
  if (a.matrix().size() != b.matrix().size()) throw std::invalid_argument("kl_divergence: size mismatch");
  return kl_divergence(std::span<const double>(a.matrix().data(), static_cast<std::size_t>(a.matrix().size())),
                       std::span<const double>(b.matrix().data(), static_cast<std::size_t>(b.matrix().size())));
}

double kl_divergence(const SecondMoment& a, const SecondMoment& b) {
  require_same_alphabet(a.alphabet(), b.alphabet());
  return kl_divergence(std::span<const double>(a.matrix().data(), static_cast<std::size_t>(a.matrix().size())),
                       std::span<const double>(b.matrix().data(), static_cast<std::size_t>(b.matrix().size())));
}

}  // namespace hmmres
