#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace platoonlab {

/// Time-indexed reference velocity profile, linearly interpolated between
/// samples and held constant past the ends.
struct DriveCycle {
  std::vector<double> t;
  std::vector<double> v;

  double duration() const { return t.empty() ? 0.0 : t.back(); }
  double v_ref(double time) const;

  /// End of the leading constant-velocity prefix; the aggressive portion of
  /// the profile starts here.
  double activity_start() const;
};

/// Two-column CSV (header `t,v`, SI units). Malformed rows, non-monotone time
/// and velocities outside [0, v_max] are reported with line numbers.
DriveCycle load_drive_cycle(const std::string& path, double v_max);

void save_drive_cycle(const DriveCycle& cycle, const std::string& path);

/// Built-in stand-in for an aggressive certification cycle: 75 s constant
/// 20 m/s, then seeded piecewise ramps with slopes up to 3 m/s^2 and holds,
/// velocities within [5, 35] m/s.
DriveCycle synthetic_aggressive_cycle(double duration, uint64_t seed);

}  // namespace platoonlab
