#include "platoonlab/drive_cycle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace platoonlab {

double DriveCycle::v_ref(double time) const {
  if (t.empty()) return 0.0;
  if (time <= t.front()) return v.front();
  if (time >= t.back()) return v.back();
  const auto it = std::upper_bound(t.begin(), t.end(), time);
  const size_t hi = static_cast<size_t>(it - t.begin());
  const size_t lo = hi - 1;
  const double frac = (time - t[lo]) / (t[hi] - t[lo]);
  return v[lo] + frac * (v[hi] - v[lo]);
}

double DriveCycle::activity_start() const {
  if (t.empty()) return 0.0;
  for (size_t i = 1; i < t.size(); ++i) {
    if (std::abs(v[i] - v[0]) > 1e-9) return t[i - 1];
  }
  return t.back();
}

DriveCycle load_drive_cycle(const std::string& path, double v_max) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open drive cycle file: " + path);
  DriveCycle cycle;
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path + ": empty drive cycle file");
  }
  ++line_no;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string t_str, v_str, extra;
    if (!std::getline(ss, t_str, ',') || !std::getline(ss, v_str, ',')) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": malformed row '" + line + "'");
    }
    double time = 0.0, vel = 0.0;
    try {
      time = std::stod(t_str);
      vel = std::stod(v_str);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": non-numeric value in '" + line + "'");
    }
    if (!cycle.t.empty() && time <= cycle.t.back()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": time values must be strictly increasing");
    }
    if (vel < 0.0 || vel > v_max) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": velocity " + std::to_string(vel) +
                               " outside [0, " + std::to_string(v_max) + "]");
    }
    cycle.t.push_back(time);
    cycle.v.push_back(vel);
  }
  if (cycle.t.size() < 2) {
    throw std::runtime_error(path + ": drive cycle needs at least two samples");
  }
  return cycle;
}

void save_drive_cycle(const DriveCycle& cycle, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write drive cycle file: " + path);
  out << "t,v\n";
  char buf[80];
  for (size_t i = 0; i < cycle.t.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", cycle.t[i], cycle.v[i]);
    out << buf;
  }
}

namespace {

double splitmix_unit(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z = z ^ (z >> 31);
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

}  // namespace

DriveCycle synthetic_aggressive_cycle(double duration, uint64_t seed) {
  if (duration <= 0.0) {
    throw std::invalid_argument("synthetic_aggressive_cycle: duration must be positive");
  }
  DriveCycle cycle;
  uint64_t state = seed ? seed : 0x6a09e667f3bcc909ull;
  const double cruise_v = 20.0;
  const double cruise_end = std::min(duration, 75.0);
  cycle.t = {0.0, cruise_end};
  cycle.v = {cruise_v, cruise_v};
  double t = cruise_end;
  double v = cruise_v;
  while (t < duration) {
    // Ramp to a fresh target at a slope in [1, 3] m/s^2, then hold 3-8 s.
    const double target = 5.0 + 30.0 * splitmix_unit(state);
    const double slope = 1.0 + 2.0 * splitmix_unit(state);
    const double ramp_time = std::max(std::abs(target - v) / slope, 0.25);
    if (t + ramp_time >= duration) {
      const double frac = (duration - t) / ramp_time;
      v += (target - v) * frac;
      cycle.t.push_back(duration);
      cycle.v.push_back(v);
      break;
    }
    t += ramp_time;
    v = target;
    cycle.t.push_back(t);
    cycle.v.push_back(v);
    const double hold = 3.0 + 5.0 * splitmix_unit(state);
    if (t + hold >= duration) {
      cycle.t.push_back(duration);
      cycle.v.push_back(v);
      break;
    }
    t += hold;
    cycle.t.push_back(t);
    cycle.v.push_back(v);
  }
  return cycle;
}

}  // namespace platoonlab
