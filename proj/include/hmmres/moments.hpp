#pragma once

// Proper systems and generalized second moments of HMMs.
//
// A proper system phi assigns every symbol a a nonnegative k-vector phi_a with
// sum_a sum_j phi_a(j) = 1. Given an HMM with transitions p and emissions
// nu_j, its generalized second moment is
//
//   M_{phi,H}(a, b) = phi_a^T p chi_b,   chi_b = (nu_1(b), ..., nu_k(b)),
//
// i.e. M = Phi p E with Phi the |X| x k matrix whose rows are phi_a and E the
// k x |X| emission matrix. chi_b is built from the HMM emissions.

#include <cstddef>

#include "hmmres/hmm.hpp"
#include "hmmres/interval_model.hpp"
#include "hmmres/second_moment.hpp"

namespace hmmres {

class ProperSystem {
 public:
  static constexpr double kSumTolerance = 1e-10;

  /// phi is |X| x k; row a is phi_a. Checked: entries >= 0, total mass 1.
  ProperSystem(AlphabetPtr alphabet, Matrix phi);

  const AlphabetPtr& alphabet() const { return alphabet_; }
  std::size_t k() const { return static_cast<std::size_t>(phi_.cols()); }
  const Matrix& matrix() const { return phi_; }
  double operator()(Symbol a, std::size_t j) const { return phi_(a, static_cast<Eigen::Index>(j)); }

 private:
  AlphabetPtr alphabet_;
  Matrix phi_;
};

/// Unchecked bilinear form Phi * transition * emission. Accepts arbitrary
/// (possibly improper) phi and non-stochastic transition matrices.
Matrix generalized_moment_raw(const Matrix& phi, const Matrix& transition, const Matrix& emission);

/// M_{phi,H}. A proper phi and a valid HMM always give a stochastic matrix.
SecondMoment generalized_moment(const ProperSystem& phi, const Hmm& h);

/// d_phi(a) = sum_j phi_a(j).
Distribution d_phi(const ProperSystem& phi);

/// The system that reproduces the expected moment of an interval model:
/// u_rl = c_rl / N, u_r = sum_l u_rl, phi_a = (u_1 mu_1(a), ..., u_k mu_k(a)),
/// so that M_X(a, b) = phi_a^T U chi_b and d_phi equals the left marginal of M_X.
struct CanonicalSystem {
  ProperSystem phi;
  Matrix u;
};

CanonicalSystem canonical_phi(const IntervalModel& model, std::size_t n);

/// HMM with emissions mu_j and transitions u_rl / u_r (identity row where
/// u_r = 0). With canonical_phi it satisfies generalized_moment == M_X.
Hmm canonical_hmm(const IntervalModel& model, std::size_t n);

}  // namespace hmmres
