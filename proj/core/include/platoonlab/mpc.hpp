#pragma once

#include "platoonlab/observer.hpp"
#include "platoonlab/qp.hpp"

#include <Eigen/Dense>

namespace platoonlab {

/// Input and rear-AV safety bounds; C selects the rear vehicle's error block.
struct ConstraintSets {
  double u_max = 4.0;
  double h_tilde_max = 15.0;
  double v_tilde_max = 10.0;

  Eigen::Vector3d x_max() const { return {h_tilde_max, v_tilde_max, u_max}; }
  /// [0_{3 x 3(n-1)}, I_3].
  static Eigen::MatrixXd selector(int n_x);
};

/// How the steady-state target treats the tracked-output equation. The rear
/// gap row is the single output one input can regulate to zero; the
/// three-row variant keeps the full rear block as printed and in practice
/// falls back to the origin whenever the estimate is nonzero.
enum class TargetMode { TrackedGap, RearBlock };

struct MpcConfig {
  int horizon = 2;
  Eigen::MatrixXd q;           // n_x x n_x stage weight
  Eigen::MatrixXd r;           // n_u x n_u input weight
  Eigen::MatrixXd p_terminal;  // Riccati terminal weight
  Eigen::MatrixXd q_bar;       // target-problem state weight
  Eigen::MatrixXd r_bar;       // target-problem input weight
  ConstraintSets sets;
  TargetMode target_mode = TargetMode::TrackedGap;

  static MpcConfig defaults(int n_x);
};

struct SteadyStateTarget {
  Eigen::VectorXd x_bar;
  double u_bar = 0.0;
};

struct TargetResult {
  SteadyStateTarget target;
  bool fallback = false;  // infeasible problem; target reset to the origin
  double eq_residual = 0.0;
  QpStatus status = QpStatus::Optimal;
};

/// Eq-constrained least-norm target: minimize |x_bar|^2_Qbar + |u_bar|^2_Rbar
/// subject to the steady-state equation of the internal model under the
/// current disturbance estimate and the tracked-output condition, inside the
/// constraint sets. Infeasibility falls back to the origin with a flag.
TargetResult solve_steady_state_target(const InternalModel& model,
                                       const Eigen::VectorXd& d_hat,
                                       const MpcConfig& cfg);

struct MpcResult {
  double u_hat = 0.0;
  QpStatus status = QpStatus::Optimal;
  bool feasible = false;
  Eigen::VectorXd sequence;  // optimal c(0..N-1) when feasible
  double cost = 0.0;
  int iterations = 0;
  double solve_seconds = 0.0;
};

/// Receding-horizon problem over the correction sequence c(j): internal-model
/// dynamics driven by the ramped disturbance estimate, rear-block state
/// constraints over [0, N], total-input constraints over [0, N-1], quadratic
/// cost around the steady-state target with the Riccati terminal weight.
MpcResult solve_mpc(const Eigen::VectorXd& xi_hat, const SteadyStateTarget& target,
                    const Eigen::MatrixXd& k, const InternalModel& model,
                    const MpcConfig& cfg);

struct DualLoopCommand {
  double u = 0.0;
  bool tripwire = false;  // |K x + u_hat| exceeded the bound beyond tolerance
};

/// u = K x + u_hat with a hard clamp; the clamp firing beyond QP tolerance is
/// reported so the harness can log it.
DualLoopCommand dual_loop_control(const Eigen::VectorXd& x, double u_hat,
                                  const Eigen::MatrixXd& k,
                                  const ConstraintSets& sets);

/// Shift register of the last optimal sequence for infeasible steps: next
/// unused element if it stays input-feasible at the current state, else zero.
class MpcFallback {
 public:
  void store(const Eigen::VectorXd& sequence);
  double next(const Eigen::MatrixXd& k, const Eigen::VectorXd& x, double u_max);
  bool has_stored() const { return cursor_ >= 0 && cursor_ < sequence_.size(); }

 private:
  Eigen::VectorXd sequence_;
  Eigen::Index cursor_ = -1;
};

}  // namespace platoonlab
