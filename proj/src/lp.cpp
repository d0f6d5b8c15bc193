#include "hmmres/lp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace hmmres {

std::string to_string(LpStatus status) {
  switch (status) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

class Tableau {
 public:
  Tableau(MatrixXd a, VectorXd b, const LpOptions& options)
      : t_(a.rows(), a.cols() + 1), basis_(static_cast<std::size_t>(a.rows())), options_(options) {
    t_.leftCols(a.cols()) = a;
    t_.col(a.cols()) = b;
  }

  Index rows() const { return t_.rows(); }
  Index cols() const { return t_.cols() - 1; }
  double rhs(Index i) const { return t_(i, cols()); }
  double entry(Index i, Index j) const { return t_(i, j); }
  std::vector<Index>& basis() { return basis_; }
  const std::vector<Index>& basis() const { return basis_; }
  int iterations() const { return iterations_; }

  void set_costs(const VectorXd& cost) {
    cost_ = cost;
    reduced_ = cost;
    for (Index i = 0; i < rows(); ++i) {
      const double cb = cost(basis_[static_cast<std::size_t>(i)]);
      if (cb != 0.0) reduced_ -= cb * t_.row(i).head(cols()).transpose();
    }
  }

  void pivot(Index r, Index q) {
    t_.row(r) /= t_(r, q);
    for (Index i = 0; i < rows(); ++i) {
      if (i == r) continue;
      const double f = t_(i, q);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
    }
    const double f = reduced_(q);
    if (f != 0.0) reduced_ -= f * t_.row(r).head(cols()).transpose();
    basis_[static_cast<std::size_t>(r)] = q;
    ++iterations_;
  }

  /// Bland's rule over columns [0, allowed). Returns the final status.
  LpStatus optimize(Index allowed) {
    while (true) {
      if (iterations_ >= options_.max_iterations) return LpStatus::iteration_limit;
      Index q = -1;
      for (Index j = 0; j < allowed; ++j) {
        if (reduced_(j) < -options_.cost_tolerance) {
          q = j;
          break;
        }
      }
      if (q < 0) return LpStatus::optimal;
      Index r = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < rows(); ++i) {
        const double a = t_(i, q);
        if (a <= options_.pivot_tolerance) continue;
        const double ratio = std::max(rhs(i), 0.0) / a;
        const bool better = ratio < best - 1e-15;
        const bool tie = !better && ratio <= best + 1e-15 && r >= 0 &&
                         basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(r)];
        if (better || tie) {
          best = ratio;
          r = i;
        }
      }
      if (r < 0) return LpStatus::unbounded;
      pivot(r, q);
    }
  }

  double objective() const {
    double z = 0.0;
    for (Index i = 0; i < rows(); ++i) z += cost_(basis_[static_cast<std::size_t>(i)]) * rhs(i);
    return z;
  }

 private:
  MatrixXd t_;
  VectorXd cost_;
  VectorXd reduced_;
  std::vector<Index> basis_;
  LpOptions options_;
  int iterations_ = 0;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options) {
  const Index n = lp.c.size();
  const Index m_ub = lp.a_ub.rows();
  const Index m_eq = lp.a_eq.rows();
  if ((m_ub > 0 && (lp.a_ub.cols() != n || lp.b_ub.size() != m_ub)) ||
      (m_eq > 0 && (lp.a_eq.cols() != n || lp.b_eq.size() != m_eq)))
    throw std::invalid_argument("solve_lp: inconsistent dimensions");

  const Index m = m_ub + m_eq;
  const Index n_struct = n + m_ub;       // original variables and slacks
  const Index n_total = n_struct + m;    // plus one artificial per row

  // Standard form A x = b, b >= 0, built row by row.
  MatrixXd a = MatrixXd::Zero(m, n_total);
  VectorXd b(m);
  VectorXd row_sign(m);
  for (Index i = 0; i < m_ub; ++i) {
    a.row(i).head(n) = lp.a_ub.row(i);
    a(i, n + i) = 1.0;
    b(i) = lp.b_ub(i);
  }
  for (Index i = 0; i < m_eq; ++i) {
    a.row(m_ub + i).head(n) = lp.a_eq.row(i);
    b(m_ub + i) = lp.b_eq(i);
  }
  for (Index i = 0; i < m; ++i) {
    row_sign(i) = b(i) < 0.0 ? -1.0 : 1.0;
    a.row(i).head(n_struct) *= row_sign(i);
    b(i) *= row_sign(i);
    a(i, n_struct + i) = 1.0;
  }

  Tableau tab(a, b, options);
  for (Index i = 0; i < m; ++i) tab.basis()[static_cast<std::size_t>(i)] = n_struct + i;

  LpSolution sol;
  VectorXd phase1 = VectorXd::Zero(n_total);
  phase1.tail(m).setOnes();
  tab.set_costs(phase1);
  LpStatus status = tab.optimize(n_total);
  sol.iterations = tab.iterations();
  if (status == LpStatus::iteration_limit) {
    sol.status = status;
    return sol;
  }
  const double feasibility_tol = 1e-9 * std::max(1.0, b.cwiseAbs().maxCoeff());
  if (tab.objective() > feasibility_tol) {
    sol.status = LpStatus::infeasible;
    return sol;
  }
  // Pivot zero-level artificials out of the basis where possible; rows where
  // that fails are redundant and keep their artificial at zero.
  for (Index i = 0; i < m; ++i) {
    if (tab.basis()[static_cast<std::size_t>(i)] < n_struct) continue;
    for (Index j = 0; j < n_struct; ++j) {
      if (std::abs(tab.entry(i, j)) > 1e-9) {
        tab.pivot(i, j);
        break;
      }
    }
  }

  VectorXd phase2 = VectorXd::Zero(n_total);
  phase2.head(n) = lp.c;
  tab.set_costs(phase2);
  status = tab.optimize(n_struct);
  sol.iterations = tab.iterations();
  sol.status = status;
  if (status != LpStatus::optimal) return sol;

  // Certificate from the final basis.
  MatrixXd basis_matrix(m, m);
  VectorXd basis_cost(m);
  for (Index i = 0; i < m; ++i) {
    const Index col = tab.basis()[static_cast<std::size_t>(i)];
    basis_matrix.col(i) = a.col(col);
    basis_cost(i) = phase2(col);
  }
  const Eigen::FullPivLU<MatrixXd> lu(basis_matrix);
  VectorXd full = VectorXd::Zero(n_total);
  VectorXd y = VectorXd::Zero(m);
  if (lu.isInvertible()) {
    const VectorXd xb = lu.solve(b);
    for (Index i = 0; i < m; ++i) full(tab.basis()[static_cast<std::size_t>(i)]) = xb(i);
    y = lu.transpose().solve(basis_cost);
  } else {
    for (Index i = 0; i < m; ++i) full(tab.basis()[static_cast<std::size_t>(i)]) = tab.rhs(i);
  }

  sol.x = full.head(n);
  sol.objective = lp.c.dot(sol.x);
  double primal = (a * full - b).cwiseAbs().maxCoeff();
  primal = std::max(primal, -std::min(0.0, full.head(n_struct).minCoeff()));
  primal = std::max(primal, full.tail(m).cwiseAbs().maxCoeff());
  sol.primal_residual = primal;
  const VectorXd reduced = phase2.head(n_struct) - a.leftCols(n_struct).transpose() * y;
  sol.dual_infeasibility = std::max(0.0, -reduced.minCoeff());
  sol.duality_gap = std::abs(sol.objective - b.dot(y));
  sol.dual = y.cwiseProduct(row_sign);
  return sol;
}

}  // namespace hmmres
