#pragma once

#include "platoonlab/range_policy.hpp"

namespace platoonlab {

enum class VehicleKind { AV, HV };

struct VehicleParams {
  double tau = 0.1;    // propulsion time constant [s]
  double alpha = 0.0;  // headway gain [1/s], HV only
  double beta = 0.0;   // relative-velocity gain [1/s], HV only
  VehicleKind kind = VehicleKind::AV;

  bool valid() const {
    if (tau <= 0.0) return false;
    if (kind == VehicleKind::HV) return alpha > 0.0 && beta >= 0.0;
    return true;
  }
};

struct VehicleState {
  double p = 0.0;  // position [m]
  double v = 0.0;  // velocity [m/s]
  double a = 0.0;  // acceleration [m/s^2]
};

/// Forward-Euler step of the triple-integrator-with-lag AV model under
/// command u.
VehicleState step_av(const VehicleState& s, double u, double tau, double t_s);

/// Forward-Euler step of the optimal-velocity HV model with actuator lag.
/// `gap` and `v_prev` are read from the predecessor before the update.
VehicleState step_hv(const VehicleState& s, double gap, double v_prev,
                     const VehicleParams& params, const RangePolicy& policy,
                     double t_s);

}  // namespace platoonlab
