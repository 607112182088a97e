#include "platoonlab/range_policy.hpp"

#include <cmath>
#include <stdexcept>

namespace platoonlab {

double desired_velocity(double gap, const RangePolicy& policy) {
  if (gap <= policy.h_s) return 0.0;
  if (gap >= policy.h_g) return policy.v_max;
  const double phase = M_PI * (gap - policy.h_s) / (policy.h_g - policy.h_s);
  return 0.5 * policy.v_max * (1.0 - std::cos(phase));
}

double desired_velocity_gradient(double gap, const RangePolicy& policy) {
  if (!(gap > policy.h_s && gap < policy.h_g)) {
    throw std::domain_error("desired_velocity_gradient: gap outside (h_s, h_g)");
  }
  const double width = policy.h_g - policy.h_s;
  return 0.5 * policy.v_max * M_PI / width *
         std::sin(M_PI * (gap - policy.h_s) / width);
}

double setpoint_gap(double v_star, const RangePolicy& policy) {
  if (!(v_star > 0.0 && v_star < policy.v_max)) {
    throw std::domain_error("setpoint_gap: v_star outside (0, v_max)");
  }
  const double width = policy.h_g - policy.h_s;
  return width / M_PI * std::acos(1.0 - 2.0 * v_star / policy.v_max) +
         policy.h_s;
}

}  // namespace platoonlab
