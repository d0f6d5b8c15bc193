#include "hmmres/second_moment.hpp"

#include <cmath>
#include <stdexcept>

namespace hmmres {

SecondMoment::SecondMoment(AlphabetPtr alphabet, Matrix matrix)
    : alphabet_(std::move(alphabet)), matrix_(std::move(matrix)) {
  if (!alphabet_) throw std::invalid_argument("second moment without alphabet");
  const auto n = static_cast<Eigen::Index>(alphabet_->size());
  if (matrix_.rows() != n || matrix_.cols() != n)
    throw std::invalid_argument("second moment shape does not match alphabet");
  if ((matrix_.array() < 0.0).any() || !matrix_.allFinite())
    throw std::invalid_argument("second moment entries must be nonnegative");
  if (std::abs(matrix_.sum() - 1.0) > kSumTolerance)
    throw std::invalid_argument("second moment entries must sum to 1");
}

SecondMoment SecondMoment::point_mass(AlphabetPtr alphabet, Symbol a, Symbol b) {
  const auto n = static_cast<Eigen::Index>(alphabet->size());
  Matrix m = Matrix::Zero(n, n);
  m(a, b) = 1.0;
  return {std::move(alphabet), std::move(m)};
}

SecondMoment SecondMoment::product(const Distribution& mu, const Distribution& nu) {
  require_same_alphabet(mu.alphabet(), nu.alphabet());
  const auto n = static_cast<Eigen::Index>(mu.size());
  Matrix m(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) m(a, b) = mu[static_cast<Symbol>(a)] * nu[static_cast<Symbol>(b)];
  return {mu.alphabet(), std::move(m)};
}

Eigen::MatrixX<long long> pair_counts(std::span<const Symbol> x, std::size_t alphabet_size) {
  const auto n = static_cast<Eigen::Index>(alphabet_size);
  Eigen::MatrixX<long long> c = Eigen::MatrixX<long long>::Zero(n, n);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    if (x[i] >= alphabet_size || x[i + 1] >= alphabet_size) throw std::out_of_range("symbol outside alphabet");
    ++c(x[i], x[i + 1]);
  }
  return c;
}

SecondMoment empirical_moment(std::span<const Symbol> x, const AlphabetPtr& alphabet) {
  if (x.size() < 2) throw std::invalid_argument("empirical_moment needs a sequence of length >= 2");
  const auto counts = pair_counts(x, alphabet->size());
  const double n_pairs = static_cast<double>(x.size() - 1);
  return {alphabet, counts.cast<double>() / n_pairs};
}

namespace {

Distribution renormalized(const AlphabetPtr& alphabet, const Vector& v) {
  std::vector<double> p(v.data(), v.data() + v.size());
  // Marginals of a checked moment sum to 1 up to rounding; fold that in.
  return Distribution::normalized(alphabet, std::move(p));
}

}  // namespace

Distribution marginalize_left(const SecondMoment& m) { return renormalized(m.alphabet(), m.matrix().rowwise().sum()); }

Distribution marginalize_right(const SecondMoment& m) {
  return renormalized(m.alphabet(), m.matrix().colwise().sum().transpose());
}

double tv_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("tv_distance: shape mismatch");
  return (a - b).cwiseAbs().sum();
}

double tv_distance(const SecondMoment& a, const SecondMoment& b) {
  require_same_alphabet(a.alphabet(), b.alphabet());
  return tv_distance(a.matrix(), b.matrix());
}

double column_space_residual(const Matrix& m, std::span<const Distribution> basis) {
  if (basis.empty()) throw std::invalid_argument("column_space_residual: empty basis");
  const auto n = m.rows();
  Matrix b(n, static_cast<Eigen::Index>(basis.size()));
  for (std::size_t j = 0; j < basis.size(); ++j) {
    if (static_cast<Eigen::Index>(basis[j].size()) != n)
      throw std::invalid_argument("column_space_residual: basis dimension mismatch");
    for (Eigen::Index a = 0; a < n; ++a) b(a, static_cast<Eigen::Index>(j)) = basis[j][static_cast<Symbol>(a)];
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(b);
  const auto rank = qr.rank();
  double worst = 0.0;
  if (rank == 0) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) worst = std::max(worst, m.col(c).norm());
    return worst;
  }
  const Matrix q = Matrix(qr.householderQ()).leftCols(rank);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const Vector col = m.col(c);
    const Vector residual = col - q * (q.transpose() * col);
    worst = std::max(worst, residual.norm());
  }
  return worst;
}

double column_space_residual(const SecondMoment& m, std::span<const Distribution> basis) {
  for (const auto& d : basis) require_same_alphabet(m.alphabet(), d.alphabet());
  return column_space_residual(m.matrix(), basis);
}

}  // namespace hmmres
