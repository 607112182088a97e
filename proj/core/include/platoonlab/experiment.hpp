#pragma once

#include "platoonlab/acc.hpp"
#include "platoonlab/drive_cycle.hpp"
#include "platoonlab/mpc.hpp"
#include "platoonlab/observer.hpp"
#include "platoonlab/platoon.hpp"
#include "platoonlab/scenario.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace platoonlab {

enum class ControllerKind { ACC, DualLoop };

struct ExperimentConfig {
  PlatoonScenario scenario;
  DriveCycle cycle;
  int collect_samples = 500;
  ACCGains acc;
  LeaderGains leader;
  double dither_amplitude = 0.1;
  bool dither_enabled = true;
  uint64_t seed = 42;
  double beta1_upper = 0.5;
  double tau1_lower = 0.1;
  InnerLoopOptions inner;
  ObserverOptions observer;
  int mpc_horizon = 2;
  double q_scale = 10.0;
  double r_scale = 1.0;
  double q_bar_scale = 1e3;
  double r_bar_scale = 0.0;
  double h_tilde_max = 15.0;
  double v_tilde_max = 10.0;
  TargetMode target_mode = TargetMode::TrackedGap;

  static ExperimentConfig defaults();
};

/// One recorded control step.
struct LogRow {
  double t = 0.0;
  double v_ref = 0.0;
  std::vector<VehicleState> states;
  Eigen::VectorXd errors;
  double u_leader = 0.0;
  double u_rear = 0.0;
  double u_hat = 0.0;
  Eigen::VectorXd xi_hat;       // empty before synthesis
  Eigen::VectorXd target_x_bar; // empty before synthesis
  double target_u_bar = 0.0;
  int mpc_status = -1;          // QpStatus value; -1 outside the MPC phase
  bool mpc_fallback = false;
  bool target_fallback = false;
  double mpc_seconds = 0.0;
  int phase = 0;  // 0 collection/baseline, 1 dual-loop
};

struct SynthesisArtifacts {
  DisturbanceBound bound;
  InnerLoopGain gain;
  ObserverGains observer;
  InternalModel model;
  MpcConfig mpc;
  double synthesis_seconds = 0.0;
};

struct SimulationLog {
  std::vector<LogRow> rows;
  int collect_end = 0;          // first dual-loop step index
  double cycle_activity_start = 0.0;
  double u_max = 4.0;
  bool collision = false;
  std::string abort_reason;
  int tripwire_count = 0;
  int mpc_infeasible_count = 0;
  int target_fallback_count = 0;
  ControllerKind controller = ControllerKind::ACC;
  std::string scenario_hash;
  std::optional<SynthesisArtifacts> synthesis;
  DataLog data;  // collected samples (both controllers record them)
};

/// Runs the three-phase experiment (or the ACC baseline throughout) against
/// the configured drive cycle. Collisions abort cleanly with a partial log;
/// synthesis failures propagate as exceptions.
SimulationLog run_experiment(const ExperimentConfig& config, ControllerKind kind);

struct WindowMetrics {
  double t_begin = 0.0;
  double t_end = 0.0;
  std::vector<double> peak_v_tilde;  // per vehicle, |v_i - v_ref|
  double rms_rear_spacing_error = 0.0;
  double max_rear_spacing_error = 0.0;
  int input_violations = 0;
  double head_to_tail_ratio = 0.0;  // peak |v~_n| / peak |v~_1|
  bool head_to_tail_defined = false;
  double hv_chain_ratio = 0.0;  // peak |v~_{n-1}| / peak |v~_1|
  double mean_mpc_seconds = 0.0;
  double max_mpc_seconds = 0.0;
};

struct Metrics {
  WindowMetrics post_synthesis;
  WindowMetrics cycle;  // aggressive portion of the drive cycle
  bool collision = false;
  int tripwire_count = 0;
};

Metrics compute_metrics(const SimulationLog& log);
WindowMetrics compute_window_metrics(const SimulationLog& log, double t_begin,
                                     double t_end);

}  // namespace platoonlab
