#pragma once

#include <Eigen/Dense>

namespace platoonlab {

struct DareOptions {
  double tol = 1e-12;   // infinity-norm change between iterates
  int max_iter = 10000;
};

struct DareResult {
  Eigen::MatrixXd p;
  int iterations = 0;
  double residual = 0.0;  // ||P - (A'PA - A'PB (B'PB+R)^-1 B'PA + Q)||_inf
  bool converged = false;
};

/// Discrete algebraic Riccati equation by fixed-point iteration from P0 = Q.
/// Requires Q >= 0, R > 0 and a stabilizable (A, B); non-convergence within
/// the iteration cap is reported through `converged`.
DareResult dare(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                const DareOptions& opts = {});

}  // namespace platoonlab
