#pragma once

// Second moments: probability matrices on X x X describing consecutive-pair
// frequencies. A sequence of length N+1 contributes N pairs (x_i, x_{i+1}).

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hmmres/prob.hpp"

namespace hmmres {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class SecondMoment {
 public:
  static constexpr double kSumTolerance = 1e-12;

  /// Checked: entries >= 0 and summing to 1.
  SecondMoment(AlphabetPtr alphabet, Matrix matrix);

  /// Point mass at (a, b).
  static SecondMoment point_mass(AlphabetPtr alphabet, Symbol a, Symbol b);
  /// mu (x) nu, i.e. M(a,b) = mu(a) nu(b).
  static SecondMoment product(const Distribution& mu, const Distribution& nu);

  const AlphabetPtr& alphabet() const { return alphabet_; }
  std::size_t size() const { return static_cast<std::size_t>(matrix_.rows()); }
  double operator()(Symbol a, Symbol b) const { return matrix_(a, b); }
  const Matrix& matrix() const { return matrix_; }

 private:
  AlphabetPtr alphabet_;
  Matrix matrix_;
};

/// M(x)(a,b) = |{i <= N : x_i = a, x_{i+1} = b}| / N for x of length N+1.
/// Throws std::invalid_argument when |x| < 2.
SecondMoment empirical_moment(std::span<const Symbol> x, const AlphabetPtr& alphabet);

/// Raw pair counts of x (no normalization); used by exact count identities.
Eigen::MatrixX<long long> pair_counts(std::span<const Symbol> x, std::size_t alphabet_size);

/// Left marginal: sum over b of M(a, b).
Distribution marginalize_left(const SecondMoment& m);
/// Right marginal: sum over b of M(b, a).
Distribution marginalize_right(const SecondMoment& m);

/// Entrywise un-halved L1 distance over X x X.
double tv_distance(const SecondMoment& a, const SecondMoment& b);
double tv_distance(const Matrix& a, const Matrix& b);

/// Largest L2 norm, over the columns of M, of the residual after orthogonal
/// projection onto span(basis). Rank-deficient bases are projected onto the
/// span they actually achieve (column-pivoted QR).
double column_space_residual(const Matrix& m, std::span<const Distribution> basis);
double column_space_residual(const SecondMoment& m, std::span<const Distribution> basis);

}  // namespace hmmres
