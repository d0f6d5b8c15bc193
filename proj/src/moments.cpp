#include "hmmres/moments.hpp"

#include <cmath>
#include <stdexcept>

namespace hmmres {

ProperSystem::ProperSystem(AlphabetPtr alphabet, Matrix phi) : alphabet_(std::move(alphabet)), phi_(std::move(phi)) {
  if (!alphabet_) throw std::invalid_argument("proper system without alphabet");
  if (phi_.rows() != static_cast<Eigen::Index>(alphabet_->size()) || phi_.cols() == 0)
    throw std::invalid_argument("proper system must be |X| x k");
  if (!phi_.allFinite() || (phi_.array() < 0.0).any())
    throw std::invalid_argument("proper system entries must be nonnegative");
  if (std::abs(phi_.sum() - 1.0) > kSumTolerance) throw std::invalid_argument("proper system mass must be 1");
}

Matrix generalized_moment_raw(const Matrix& phi, const Matrix& transition, const Matrix& emission) {
  if (phi.cols() != transition.rows() || transition.cols() != emission.rows() || transition.rows() != transition.cols())
    throw std::invalid_argument("generalized_moment: dimension mismatch");
  return phi * transition * emission;
}

SecondMoment generalized_moment(const ProperSystem& phi, const Hmm& h) {
  require_same_alphabet(phi.alphabet(), h.alphabet());
  Matrix m = generalized_moment_raw(phi.matrix(), h.transition(), h.emission());
  // Exact algebra gives total mass 1; clear rounding-level negatives.
  m = m.cwiseMax(0.0);
  return {phi.alphabet(), std::move(m)};
}

Distribution d_phi(const ProperSystem& phi) {
  const Vector d = phi.matrix().rowwise().sum();
  return Distribution::normalized(phi.alphabet(), std::vector<double>(d.data(), d.data() + d.size()));
}

CanonicalSystem canonical_phi(const IntervalModel& model, std::size_t n) {
  const auto c = transition_counts(model, n);
  const Matrix u = c.cast<double>() / static_cast<double>(n);
  const Vector row_mass = u.rowwise().sum();
  const auto dim = static_cast<Eigen::Index>(model.alphabet()->size());
  const auto k = static_cast<Eigen::Index>(model.k());
  Matrix phi(dim, k);
  for (Eigen::Index a = 0; a < dim; ++a)
    for (Eigen::Index j = 0; j < k; ++j) phi(a, j) = row_mass(j) * model.source(static_cast<std::size_t>(j))[static_cast<Symbol>(a)];
  return {ProperSystem(model.alphabet(), std::move(phi)), u};
}

Hmm canonical_hmm(const IntervalModel& model, std::size_t n) {
  const auto c = transition_counts(model, n);
  const auto k = static_cast<Eigen::Index>(model.k());
  Matrix p = Matrix::Zero(k, k);
  for (Eigen::Index r = 0; r < k; ++r) {
    const auto row_total = c.row(r).sum();
    if (row_total == 0) {
      p(r, r) = 1.0;
      continue;
    }
    p.row(r) = c.row(r).cast<double>() / static_cast<double>(row_total);
  }
  return Hmm(std::move(p), model.sources());
}

}  // namespace hmmres
