#pragma once

namespace platoonlab {

/// Piecewise half-cosine map from inter-vehicle gap to desired velocity,
/// clamped to 0 below h_s and to v_max above h_g.
struct RangePolicy {
  double h_s = 5.0;    // smallest spacing threshold [m]
  double h_g = 50.0;   // largest spacing threshold [m]
  double v_max = 40.0; // maximum desired velocity [m/s]

  bool valid() const { return h_s > 0.0 && h_s < h_g && v_max > 0.0; }
};

/// Desired velocity V(h). Total and continuous on the whole real line.
double desired_velocity(double gap, const RangePolicy& policy);

/// dV/dh on the open interval (h_s, h_g). Throws std::domain_error outside it:
/// the clamped branches have no useful gradient and set points live inside.
double desired_velocity_gradient(double gap, const RangePolicy& policy);

/// Equilibrium gap h* with V(h*) = v_star. Requires v_star in (0, v_max).
double setpoint_gap(double v_star, const RangePolicy& policy);

}  // namespace platoonlab
