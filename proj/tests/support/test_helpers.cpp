#include "test_helpers.hpp"

#include "platoonlab/acc.hpp"
#include "platoonlab/platoon.hpp"

namespace platoonlab::testutil {

double Rng::uniform() {
  state_ += 0x9e3779b97f4a7c15ull;
  uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z = z ^ (z >> 31);
  return 2.0 * (static_cast<double>(z >> 11) * 0x1.0p-53) - 1.0;
}

double Rng::uniform(double lo, double hi) {
  return lo + (uniform() + 1.0) * 0.5 * (hi - lo);
}

Eigen::VectorXd Rng::vector(int n, double scale) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = scale * uniform();
  return v;
}

Eigen::MatrixXd Rng::matrix(int rows, int cols, double scale) {
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = scale * uniform();
  return m;
}

LinearDataFixture make_linear_fixture(int samples, double disturbance_scale,
                                      uint64_t seed) {
  LinearDataFixture f;
  f.scenario = default_scenario();
  f.model = oracle::build_true_error_model(f.scenario, f.scenario.v_nominal);

  Rng rng(seed);
  const int n_x = f.model.n_x;
  Eigen::MatrixXd w(2, samples);
  for (int k = 0; k < samples; ++k) {
    w(0, k) = disturbance_scale * rng.uniform();
    w(1, k) = disturbance_scale * rng.uniform();
  }
  // Start from the §-style initial errors and excite with a dithered ACC-like
  // proportional pull toward the origin.
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n_x);
  x0(0) = -7.5;
  x0(1) = -5.0;
  x0(n_x - 3) = 5.0;
  x0(n_x - 2) = -5.0;
  Rng dither_rng(seed + 17);
  auto policy = [&](int, const Eigen::VectorXd& x) {
    const double u = -0.25 * x(n_x - 3) - 0.6 * x(n_x - 2) - 0.2 * x(n_x - 1) +
                     0.3 * dither_rng.uniform();
    return std::clamp(u, -f.scenario.u_max, f.scenario.u_max);
  };
  oracle::LinearRollout roll =
      oracle::rollout_linear(f.model, x0, w, policy, f.scenario.t_s);
  f.log = std::move(roll.log);
  f.w_log = std::move(roll.w_log);
  return f;
}

DataLog collect_nonlinear_data(const ExperimentConfig& config, int samples) {
  const PlatoonScenario& sc = config.scenario;
  DataLog data = make_data_log(sc.n_x(), 1, sc.t_s);
  std::vector<VehicleState> states = sc.initial_states;
  ExcitationDither dither(config.dither_enabled ? config.dither_amplitude : 0.0,
                          config.seed, sc.u_max);
  const double v_star = sc.v_nominal;
  for (int k = 0; k < samples; ++k) {
    const double v_ref = config.cycle.v_ref(k * sc.t_s);
    const double u0 =
        leader_control(states.front(), v_ref, config.leader, sc.u_max);
    const int rear = sc.n();
    const double gap = states[rear - 1].p - states[rear].p;
    const double u_n = dither.apply(acc_control(
        gap, states[rear].v, states[rear - 1].v, config.acc, sc.u_max));
    const Eigen::VectorXd x_now =
        platoon_errors(states, v_star, sc.policy, sc.d_safe);
    states = step_platoon(states, u0, u_n, sc);
    const Eigen::VectorXd x_next =
        platoon_errors(states, v_star, sc.policy, sc.d_safe);
    record_sample(data, x_now, Eigen::VectorXd::Constant(1, u_n), x_next);
  }
  return data;
}

}  // namespace platoonlab::testutil
