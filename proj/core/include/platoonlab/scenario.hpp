#pragma once

#include "platoonlab/range_policy.hpp"
#include "platoonlab/vehicle.hpp"

#include <string>
#include <vector>

namespace platoonlab {

/// Mixed platoon description: leader AV at index 0, rear AV at index n, HVs
/// in between. The rear AV's propulsion constant is the only vehicle
/// parameter the controller pipeline may read.
struct PlatoonScenario {
  std::vector<VehicleParams> vehicles;
  std::vector<VehicleState> initial_states;
  double d_safe = 20.0;     // desired rear-AV gap [m]
  double u_max = 4.0;       // input bound [m/s^2]
  double t_s = 0.05;        // sampling time [s]
  RangePolicy policy;
  double v_nominal = 20.0;  // set-point velocity the error model is built at
  std::string v_ref_profile = "synthetic";  // drive-cycle path or "synthetic"

  int n() const { return static_cast<int>(vehicles.size()) - 1; }
  int n_x() const { return 3 * n(); }

  /// Structural validation; returns a diagnostic for the first violation.
  std::string validate() const;
};

/// The bundled default: six vehicles (two AVs, four HVs) with the parameter
/// set and initial states used throughout the tests.
PlatoonScenario default_scenario();

PlatoonScenario load_scenario(const std::string& path);
void save_scenario(const PlatoonScenario& s, const std::string& path);

/// Stable FNV-1a hash of the canonical serialization; used to tie persisted
/// data logs and gains back to the scenario that produced them.
std::string scenario_hash(const PlatoonScenario& s);

}  // namespace platoonlab
