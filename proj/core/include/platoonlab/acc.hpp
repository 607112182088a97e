#pragma once

#include <cstdint>

namespace platoonlab {

/// Constant-time-gap ACC law used while platooning data is collected.
struct ACCGains {
  double k_gap = 0.23;  // spacing-error gain [1/s^2]
  double k_vel = 0.07;  // relative-velocity gain [1/s]
  double t_gap = 1.4;   // desired time gap [s]
  double d_0 = 10.0;    // standstill distance [m]

  bool valid() const {
    return k_gap > 0.0 && k_vel > 0.0 && t_gap > 0.0 && d_0 > 0.0;
  }
};

/// u = clamp(k_gap (h - (d_0 + t_gap v)) + k_vel (v_prev - v), +-u_max).
double acc_control(double gap, double v, double v_prev, const ACCGains& gains,
                   double u_max);

/// Deterministic dither source for the collection phase. Keeps X0 at full row
/// rank; the sequence is reproducible from the seed alone.
class ExcitationDither {
 public:
  ExcitationDither(double amplitude, uint64_t seed, double u_max)
      : amplitude_(amplitude), u_max_(u_max), state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  /// Returns u_acc plus a dither sample in [-amplitude, amplitude],
  /// re-clamped to the input bound.
  double apply(double u_acc);

  double amplitude() const { return amplitude_; }

 private:
  double next_uniform();  // in [-1, 1)

  double amplitude_;
  double u_max_;
  uint64_t state_;
};

}  // namespace platoonlab
