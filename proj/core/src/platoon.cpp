#include "platoonlab/platoon.hpp"

#include <algorithm>

namespace platoonlab {

std::vector<VehicleState> step_platoon(const std::vector<VehicleState>& states,
                                       double u_leader, double u_rear,
                                       const PlatoonScenario& scenario) {
  const int count = static_cast<int>(states.size());
  if (count != static_cast<int>(scenario.vehicles.size())) {
    throw std::invalid_argument("step_platoon: state count does not match scenario");
  }
  for (int i = 1; i < count; ++i) {
    const double gap = states[i - 1].p - states[i].p;
    if (gap <= 0.0) throw CollisionError(i, gap);
  }

  std::vector<VehicleState> next(count);
  next[0] = step_av(states[0], u_leader, scenario.vehicles[0].tau, scenario.t_s);
  for (int i = 1; i + 1 < count; ++i) {
    const double gap = states[i - 1].p - states[i].p;
    next[i] = step_hv(states[i], gap, states[i - 1].v, scenario.vehicles[i],
                      scenario.policy, scenario.t_s);
  }
  next[count - 1] = step_av(states[count - 1], u_rear,
                            scenario.vehicles[count - 1].tau, scenario.t_s);
  return next;
}

double leader_control(const VehicleState& s0, double v_ref,
                      const LeaderGains& gains, double u_max) {
  const double u = gains.k_p * (v_ref - s0.v) - gains.k_d * s0.a;
  return std::clamp(u, -u_max, u_max);
}

Eigen::VectorXd platoon_errors(const std::vector<VehicleState>& states,
                               double v_star, const RangePolicy& policy,
                               double d_safe) {
  const int count = static_cast<int>(states.size());
  const int n = count - 1;
  const double h_star = setpoint_gap(v_star, policy);
  Eigen::VectorXd x(3 * n);
  for (int i = 1; i <= n; ++i) {
    const double gap = states[i - 1].p - states[i].p;
    const double gap_ref = (i == n) ? d_safe : h_star;
    x(3 * (i - 1) + 0) = gap - gap_ref;
    x(3 * (i - 1) + 1) = states[i].v - v_star;
    x(3 * (i - 1) + 2) = states[i].a;
  }
  return x;
}

}  // namespace platoonlab
