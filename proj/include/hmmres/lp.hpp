#pragma once

// Small dense linear programs:
//
//   minimize c.x  subject to  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0.
//
// Two-phase tableau simplex with Bland's rule (no cycling). The final basis is
// re-solved with a pivoted LU to produce a primal point and dual multipliers,
// whose residuals and duality gap form the optimality certificate.

#include <string>

#include <Eigen/Dense>

namespace hmmres {

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

std::string to_string(LpStatus status);

struct LinearProgram {
  Eigen::VectorXd c;
  Eigen::MatrixXd a_ub;
  Eigen::VectorXd b_ub;
  Eigen::MatrixXd a_eq;
  Eigen::VectorXd b_eq;
};

struct LpSolution {
  LpStatus status = LpStatus::iteration_limit;
  Eigen::VectorXd x;
  double objective = 0.0;
  /// Multipliers for the <= rows (each <= 0) followed by the equality rows.
  Eigen::VectorXd dual;
  double primal_residual = 0.0;    // max violation of rows and of x >= 0
  double dual_infeasibility = 0.0; // max violation of reduced costs >= 0
  double duality_gap = 0.0;        // |c.x - b.y|
  int iterations = 0;
};

struct LpOptions {
  double pivot_tolerance = 1e-12;
  double cost_tolerance = 1e-11;
  int max_iterations = 100000;
};

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options = {});

}  // namespace hmmres
