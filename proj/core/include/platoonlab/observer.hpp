#pragma once

#include "platoonlab/data_log.hpp"
#include "platoonlab/inner_loop.hpp"
#include "platoonlab/lmi.hpp"

#include <Eigen/Dense>
#include <string>

namespace platoonlab {

/// Data-based nominal closed loop augmented with a second-order disturbance
/// model: state (x, w1, w2), output y = x + C_d w1.
struct InternalModel {
  Eigen::MatrixXd a_bar;  // n_x x n_x, X1 G
  Eigen::MatrixXd a_xi;   // (n_x + 2 n_w) square
  Eigen::MatrixXd b_xi;   // (n_x + 2 n_w) x n_u
  Eigen::MatrixXd c_xi;   // n_x x (n_x + 2 n_w)
  Eigen::MatrixXd b;      // n_x x n_u
  Eigen::MatrixXd b_d;    // n_x x n_w
  Eigen::MatrixXd c_d;    // n_x x n_w
  double t_s = 0.05;
  bool detectable = false;  // PBH diagnostic, attached at build time

  int n_x() const { return static_cast<int>(a_bar.rows()); }
  int n_w() const { return static_cast<int>(b_d.cols()); }
  int n_xi() const { return n_x() + 2 * n_w(); }
};

/// Default disturbance-model shaping matrices: B_d all ones; C_d row one is
/// [0 1], the remaining rows all ones.
Eigen::MatrixXd default_b_d(int n_x, int n_w = 2);
Eigen::MatrixXd default_c_d(int n_x, int n_w = 2);

InternalModel build_internal_model(const DataLog& log, const InnerLoopGain& gain,
                                   const Eigen::MatrixXd& b,
                                   const Eigen::MatrixXd& b_d,
                                   const Eigen::MatrixXd& c_d, double t_s);

/// Observer gains recovered from the Lemma-2 SDP and the defining matrix
/// equations Phi*A_xi - N_xi - L1*C_xi = 0, Phi*B_xi - G_xi = 0,
/// N_xi*H_xi - L2 = 0 with Phi = I - H_xi*C_xi and L = L1 + L2.
struct ObserverGains {
  Eigen::MatrixXd n_xi;
  Eigen::MatrixXd g_xi;
  Eigen::MatrixXd l;
  Eigen::MatrixXd l1;
  Eigen::MatrixXd l2;
  Eigen::MatrixXd h_xi;
  Eigen::MatrixXd phi;
  Eigen::MatrixXd p_o;
  double epsilon_o = 0.0;

  double error_spectral_radius = 0.0;  // rho(Phi A_xi - L1 C_xi)
  double equation_residual = 0.0;      // max residual of the three equations
  double phi_condition = 0.0;          // conditioning of Phi (PD-Luenberger form)
};

struct ObserverOptions {
  double margin = 1e-6;
  double epsilon_cap = 1.0;
  double p_cap = 1.0;       // scale normalization P_o <= p_cap I
  bool pole_disk = false;   // optional extra constraint on the error poles
  double pole_radius = 0.9;
  LmiOptions lmi;
};

/// Lemma-2 synthesis; maximizes the convergence margin epsilon_o. Throws
/// InfeasibleError when the SDP has no solution for the given (B_d, C_d).
ObserverGains synthesize_observer(const InternalModel& model,
                                  const ObserverOptions& opts = {});

/// Observer memory. xi_hat is the estimate produced by the latest
/// measurement update; z is the recursion state for the next step.
struct ObserverState {
  Eigen::VectorXd z;
  Eigen::VectorXd xi_hat;
};

/// z(0) chosen so the initial estimate is (x_measured, 0, 0).
ObserverState init_observer(const ObserverGains& gains,
                            const Eigen::VectorXd& x_measured);

/// Measurement update: xi_hat = z + H_xi y, with the current z.
void measurement_update(ObserverState& state, const ObserverGains& gains,
                        const Eigen::VectorXd& y);

/// Time update: z <- N_xi z + G_xi u_hat + L y. Call after the controller has
/// consumed xi_hat for this step.
void time_update(ObserverState& state, const ObserverGains& gains, double u_hat,
                 const Eigen::VectorXd& y);

/// Convenience composition used by tests: measurement update with the current
/// y, then time update with (u_hat, y).
ObserverState observer_step(const ObserverState& state, const ObserverGains& gains,
                            double u_hat, const Eigen::VectorXd& y);

/// d_hat = w1 component of the estimate.
Eigen::VectorXd lumped_disturbance_estimate(const ObserverState& state, int n_x,
                                            int n_w);

}  // namespace platoonlab
