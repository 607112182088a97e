#pragma once

#include "platoonlab/data_log.hpp"
#include "platoonlab/scenario.hpp"

#include <Eigen/Dense>
#include <functional>

namespace platoonlab::oracle {

/// Discretized linear platooning-error model x+ = A x + B u + D w built from
/// the true (normally unknown) HV parameters. This target exists for tests
/// and benchmarks only; the controller pipeline must never link it.
struct LinearErrorModel {
  Eigen::MatrixXd a;  // n_x x n_x, I + t_s * A_c
  Eigen::MatrixXd b;  // n_x x 1, nonzero only in the rear AV block
  Eigen::MatrixXd d;  // n_x x 2, nonzero only in the first HV block
  int n_x = 0;
  int n_u = 1;
  int n_w = 2;
};

LinearErrorModel build_true_error_model(const PlatoonScenario& scenario,
                                        double v_star);

/// One step of the linear model.
Eigen::VectorXd step_linear(const LinearErrorModel& m, const Eigen::VectorXd& x,
                            double u, const Eigen::Vector2d& w);

/// Simulates the linear model under a caller-supplied input policy and
/// disturbance sequence, recording the (U0, X0, X1) data and the matching W0.
struct LinearRollout {
  DataLog log;
  DisturbanceLog w_log;
  Eigen::VectorXd final_state;
};

LinearRollout rollout_linear(const LinearErrorModel& m,
                             const Eigen::VectorXd& x_init,
                             const Eigen::MatrixXd& w_sequence,  // n_w x T
                             const std::function<double(int, const Eigen::VectorXd&)>& policy,
                             double t_s);

/// Data-based closed-loop matrix of the inner loop: X1 G - D W0 G. On exact
/// linear data this equals A + B K.
Eigen::MatrixXd closed_loop_data_matrix(const DataLog& log,
                                        const Eigen::MatrixXd& d,
                                        const DisturbanceLog& w_log,
                                        const Eigen::MatrixXd& g);

}  // namespace platoonlab::oracle
