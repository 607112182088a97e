#pragma once

#include <Eigen/Dense>

namespace platoonlab {

/// Largest eigenvalue magnitude of a square matrix.
double spectral_radius(const Eigen::MatrixXd& m);

/// Singular-value threshold used for all rank decisions in this project:
/// sigma_max * max(rows, cols) * machine_eps * 1e3.
double rank_threshold(const Eigen::VectorXd& singular_values, int rows, int cols);

/// Numerical rank via SVD with rank_threshold().
int numerical_rank(const Eigen::MatrixXd& m);

/// Detectability test on (A, C): rank [lambda*I - A; C] must be full at every
/// eigenvalue of A outside the stability region. The discrete-time region
/// |lambda| >= 1 - 1e-9 is the default; `continuous_criterion` switches to
/// Re(lambda) >= 0 for comparison runs.
bool pbh_detectable(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c,
                    bool continuous_criterion = false);

/// Parameterization of the affine solution set {x : A x = b} as
/// x = particular + nullspace * z with orthonormal nullspace columns.
struct AffineBasis {
  Eigen::VectorXd particular;
  Eigen::MatrixXd nullspace;
  double residual = 0.0;  // ||A*particular - b||
  bool consistent = false;
};

AffineBasis solve_affine(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                         double tol = 1e-8);

}  // namespace platoonlab
