#include "platoonlab/acc.hpp"

#include <algorithm>

namespace platoonlab {

double acc_control(double gap, double v, double v_prev, const ACCGains& gains,
                   double u_max) {
  const double spacing_error = gap - (gains.d_0 + gains.t_gap * v);
  const double u = gains.k_gap * spacing_error + gains.k_vel * (v_prev - v);
  return std::clamp(u, -u_max, u_max);
}

double ExcitationDither::next_uniform() {
  // splitmix64; chosen over std::mt19937 so the sequence is pinned across
  // standard-library implementations.
  state_ += 0x9e3779b97f4a7c15ull;
  uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z = z ^ (z >> 31);
  const double unit = static_cast<double>(z >> 11) * 0x1.0p-53;  // [0,1)
  return 2.0 * unit - 1.0;
}

double ExcitationDither::apply(double u_acc) {
  const double dithered = u_acc + amplitude_ * next_uniform();
  return std::clamp(dithered, -u_max_, u_max_);
}

}  // namespace platoonlab
