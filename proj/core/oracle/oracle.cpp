#include "platoonlab_oracle/oracle.hpp"

#include "platoonlab/range_policy.hpp"

#include <stdexcept>

namespace platoonlab::oracle {

LinearErrorModel build_true_error_model(const PlatoonScenario& scenario,
                                        double v_star) {
  if (!(v_star > 0.0 && v_star < scenario.policy.v_max)) {
    throw std::domain_error("build_true_error_model: v_star outside range policy");
  }
  const int n = scenario.n();
  const int n_x = 3 * n;
  const double h_star = setpoint_gap(v_star, scenario.policy);
  const double dv_dh = desired_velocity_gradient(h_star, scenario.policy);

  Eigen::MatrixXd a_c = Eigen::MatrixXd::Zero(n_x, n_x);
  Eigen::MatrixXd b_c = Eigen::MatrixXd::Zero(n_x, 1);
  Eigen::MatrixXd d_c = Eigen::MatrixXd::Zero(n_x, 2);

  for (int i = 1; i <= n; ++i) {
    const int r = 3 * (i - 1);
    const VehicleParams& veh = scenario.vehicles[i];
    Eigen::Matrix3d a_i = Eigen::Matrix3d::Zero();
    a_i(0, 1) = -1.0;
    a_i(1, 2) = 1.0;
    if (i < n) {
      const double alpha_bar = veh.alpha * dv_dh;
      const double beta_bar = veh.alpha + veh.beta;
      a_i(2, 0) = alpha_bar / veh.tau;
      a_i(2, 1) = -beta_bar / veh.tau;
      a_i(2, 2) = -1.0 / veh.tau;
    } else {
      a_i(2, 2) = -1.0 / veh.tau;
      b_c(r + 2, 0) = 1.0 / veh.tau;
    }
    a_c.block<3, 3>(r, r) = a_i;

    if (i >= 2) {
      // Coupling to the predecessor's velocity error.
      const double c_bar = veh.beta;  // zero weight rows elsewhere
      a_c(r + 0, r - 2) = 1.0;
      if (i < n) a_c(r + 2, r - 2) = c_bar / veh.tau;
    }
  }
  // Leader coupling of HV 1: w_1 enters the gap row, w_2 = c_1 w_1 / tau_1 the
  // acceleration row.
  d_c(0, 0) = 1.0;
  d_c(2, 1) = 1.0;

  LinearErrorModel m;
  m.n_x = n_x;
  m.a = Eigen::MatrixXd::Identity(n_x, n_x) + scenario.t_s * a_c;
  m.b = scenario.t_s * b_c;
  m.d = scenario.t_s * d_c;
  return m;
}

Eigen::VectorXd step_linear(const LinearErrorModel& m, const Eigen::VectorXd& x,
                            double u, const Eigen::Vector2d& w) {
  return m.a * x + m.b * u + m.d * w;
}

LinearRollout rollout_linear(
    const LinearErrorModel& m, const Eigen::VectorXd& x_init,
    const Eigen::MatrixXd& w_sequence,
    const std::function<double(int, const Eigen::VectorXd&)>& policy,
    double t_s) {
  const int t_count = static_cast<int>(w_sequence.cols());
  LinearRollout out;
  out.log = make_data_log(m.n_x, 1, t_s);
  out.w_log.w0 = w_sequence;

  Eigen::VectorXd x = x_init;
  for (int k = 0; k < t_count; ++k) {
    const double u = policy(k, x);
    const Eigen::VectorXd x_next = step_linear(m, x, u, w_sequence.col(k));
    record_sample(out.log, x, Eigen::VectorXd::Constant(1, u), x_next);
    x = x_next;
  }
  out.final_state = x;
  return out;
}

Eigen::MatrixXd closed_loop_data_matrix(const DataLog& log,
                                        const Eigen::MatrixXd& d,
                                        const DisturbanceLog& w_log,
                                        const Eigen::MatrixXd& g) {
  return log.x1 * g - d * w_log.w0 * g;
}

}  // namespace platoonlab::oracle
