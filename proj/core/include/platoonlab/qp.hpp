#pragma once

#include <Eigen/Dense>
#include <string>

namespace platoonlab {

/// Convex quadratic program
///   min 0.5 x'Hx + f'x   s.t.  A_eq x = b_eq,  G x <= h.
/// H must be symmetric positive semidefinite; callers that need strict
/// convexity for uniqueness add their own ridge.
struct QpProblem {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd linear;
  Eigen::MatrixXd eq_lhs;   // may have zero rows
  Eigen::VectorXd eq_rhs;
  Eigen::MatrixXd ineq_lhs;  // may have zero rows
  Eigen::VectorXd ineq_rhs;

  int num_vars() const { return static_cast<int>(hessian.rows()); }
};

enum class QpStatus { Optimal, Infeasible, NumericalFailure };

struct QpOptions {
  double tol = 1e-9;
  int max_iter = 100;
};

struct QpResult {
  QpStatus status = QpStatus::NumericalFailure;
  Eigen::VectorXd x;
  double objective = 0.0;
  int iterations = 0;
  double kkt_residual = 0.0;
  std::string message;
};

QpResult solve_qp(const QpProblem& qp, const QpOptions& opts = {});

}  // namespace platoonlab
