#include "platoonlab/vehicle.hpp"

namespace platoonlab {

VehicleState step_av(const VehicleState& s, double u, double tau, double t_s) {
  VehicleState next;
  next.p = s.p + t_s * s.v;
  next.v = s.v + t_s * s.a;
  next.a = s.a + t_s / tau * (u - s.a);
  return next;
}

VehicleState step_hv(const VehicleState& s, double gap, double v_prev,
                     const VehicleParams& params, const RangePolicy& policy,
                     double t_s) {
  const double drive = params.alpha * (desired_velocity(gap, policy) - s.v) +
                       params.beta * (v_prev - s.v) - s.a;
  VehicleState next;
  next.p = s.p + t_s * s.v;
  next.v = s.v + t_s * s.a;
  next.a = s.a + t_s / params.tau * drive;
  return next;
}

}  // namespace platoonlab
