#pragma once

#include "platoonlab/scenario.hpp"

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace platoonlab {

/// Raised when a gap closes; a collision is a failed experiment, not a
/// recoverable state.
class CollisionError : public std::runtime_error {
 public:
  CollisionError(int follower, double gap)
      : std::runtime_error("collision: gap ahead of vehicle " +
                           std::to_string(follower) + " is " +
                           std::to_string(gap) + " m"),
        follower_(follower),
        gap_(gap) {}
  int follower() const { return follower_; }
  double gap() const { return gap_; }

 private:
  int follower_;
  double gap_;
};

/// Simultaneous update of the whole platoon: the two AVs step under their
/// commands, every HV steps against its predecessor's pre-step state, so one
/// call matches one step of the stacked discretized model.
std::vector<VehicleState> step_platoon(const std::vector<VehicleState>& states,
                                       double u_leader, double u_rear,
                                       const PlatoonScenario& scenario);

struct LeaderGains {
  double k_p = 3.0;
  double k_d = 0.5;
};

/// Saturated PD velocity tracker standing in for the leader's own controller.
double leader_control(const VehicleState& s0, double v_ref,
                      const LeaderGains& gains, double u_max);

/// Stacked platooning-error vector x = (h~_1, v~_1, a_1, ..., h~_n, v~_n, a_n).
/// HV gap errors are taken against the set-point gap h*(v_star); the rear AV
/// against d_safe; all velocity errors against v_star.
Eigen::VectorXd platoon_errors(const std::vector<VehicleState>& states,
                               double v_star, const RangePolicy& policy,
                               double d_safe);

}  // namespace platoonlab
