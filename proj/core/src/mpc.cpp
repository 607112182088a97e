#include "platoonlab/mpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace platoonlab {

Eigen::MatrixXd ConstraintSets::selector(int n_x) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(3, n_x);
  c.rightCols(3) = Eigen::Matrix3d::Identity();
  return c;
}

MpcConfig MpcConfig::defaults(int n_x) {
  MpcConfig cfg;
  cfg.horizon = 2;
  cfg.q = 10.0 * Eigen::MatrixXd::Identity(n_x, n_x);
  cfg.r = Eigen::MatrixXd::Identity(1, 1);
  cfg.q_bar = 1e3 * Eigen::MatrixXd::Identity(n_x, n_x);
  cfg.r_bar = Eigen::MatrixXd::Zero(1, 1);
  return cfg;
}

TargetResult solve_steady_state_target(const InternalModel& model,
                                       const Eigen::VectorXd& d_hat,
                                       const MpcConfig& cfg) {
  const int n_x = model.n_x();
  const Eigen::MatrixXd c_sel = ConstraintSets::selector(n_x);
  TargetResult out;
  out.target.x_bar = Eigen::VectorXd::Zero(n_x);
  out.target.u_bar = 0.0;

  // Tracked-output rows: the measured rear-gap row (one row per input) or the
  // printed full rear block.
  Eigen::MatrixXd tracked;
  if (cfg.target_mode == TargetMode::TrackedGap) {
    tracked = c_sel.topRows(1);
  } else {
    tracked = c_sel;
  }

  const int n_t = static_cast<int>(tracked.rows());
  QpProblem qp;
  qp.hessian = Eigen::MatrixXd::Zero(n_x + 1, n_x + 1);
  qp.hessian.topLeftCorner(n_x, n_x) = 2.0 * cfg.q_bar;
  qp.hessian(n_x, n_x) = 2.0 * cfg.r_bar(0, 0) + 1e-9;
  qp.linear = Eigen::VectorXd::Zero(n_x + 1);

  qp.eq_lhs = Eigen::MatrixXd::Zero(n_x + n_t, n_x + 1);
  qp.eq_rhs = Eigen::VectorXd::Zero(n_x + n_t);
  qp.eq_lhs.topLeftCorner(n_x, n_x) =
      Eigen::MatrixXd::Identity(n_x, n_x) - model.a_bar;
  qp.eq_lhs.block(0, n_x, n_x, 1) = -model.b;
  qp.eq_rhs.head(n_x) = model.b_d * d_hat;
  qp.eq_lhs.block(n_x, 0, n_t, n_x) = tracked;
  qp.eq_rhs.tail(n_t) = -tracked * model.c_d * d_hat;

  const Eigen::Vector3d x_max = cfg.sets.x_max();
  qp.ineq_lhs = Eigen::MatrixXd::Zero(8, n_x + 1);
  qp.ineq_rhs = Eigen::VectorXd::Zero(8);
  qp.ineq_lhs.block(0, 0, 3, n_x) = c_sel;
  qp.ineq_rhs.segment(0, 3) = x_max;
  qp.ineq_lhs.block(3, 0, 3, n_x) = -c_sel;
  qp.ineq_rhs.segment(3, 3) = x_max;
  qp.ineq_lhs(6, n_x) = 1.0;
  qp.ineq_rhs(6) = cfg.sets.u_max;
  qp.ineq_lhs(7, n_x) = -1.0;
  qp.ineq_rhs(7) = cfg.sets.u_max;

  const QpResult sol = solve_qp(qp);
  out.status = sol.status;
  if (sol.status != QpStatus::Optimal) {
    out.fallback = true;
    return out;
  }
  out.target.x_bar = sol.x.head(n_x);
  out.target.u_bar = sol.x(n_x);
  out.eq_residual =
      (qp.eq_lhs * sol.x - qp.eq_rhs).lpNorm<Eigen::Infinity>();
  return out;
}

MpcResult solve_mpc(const Eigen::VectorXd& xi_hat, const SteadyStateTarget& target,
                    const Eigen::MatrixXd& k, const InternalModel& model,
                    const MpcConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  MpcResult out;
  const int n_x = model.n_x();
  const int n_w = model.n_w();
  const int horizon = cfg.horizon;
  const Eigen::MatrixXd c_sel = ConstraintSets::selector(n_x);
  const Eigen::Vector3d x_max = cfg.sets.x_max();

  const Eigen::VectorXd x_hat = xi_hat.head(n_x);
  const Eigen::VectorXd w1_hat = xi_hat.segment(n_x, n_w);
  const Eigen::VectorXd w2_hat = xi_hat.segment(n_x + n_w, n_w);

  // Predicted disturbance ramp: w1(j) = w1 + j t_s w2.
  std::vector<Eigen::VectorXd> w1(horizon);
  for (int j = 0; j < horizon; ++j) w1[j] = w1_hat + j * model.t_s * w2_hat;

  // Free evolution and input maps: x(j) = base[j] + sc[j] * c.
  std::vector<Eigen::VectorXd> base(horizon + 1);
  std::vector<Eigen::MatrixXd> sc(horizon + 1);
  base[0] = x_hat;
  sc[0] = Eigen::MatrixXd::Zero(n_x, horizon);
  for (int j = 0; j < horizon; ++j) {
    base[j + 1] = model.a_bar * base[j] + model.b_d * w1[j];
    sc[j + 1] = model.a_bar * sc[j];
    sc[j + 1].col(j) += model.b.col(0);
  }

  // Quadratic cost around the constant target.
  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(horizon, horizon);
  Eigen::VectorXd lin = Eigen::VectorXd::Zero(horizon);
  for (int j = 0; j < horizon; ++j) {
    const Eigen::MatrixXd& weight = cfg.q;
    hess += 2.0 * sc[j].transpose() * weight * sc[j];
    lin += 2.0 * sc[j].transpose() * weight * (base[j] - target.x_bar);
    hess(j, j) += 2.0 * cfg.r(0, 0);
    lin(j) += -2.0 * cfg.r(0, 0) * target.u_bar;
  }
  hess += 2.0 * sc[horizon].transpose() * cfg.p_terminal * sc[horizon];
  lin += 2.0 * sc[horizon].transpose() * cfg.p_terminal *
         (base[horizon] - target.x_bar);

  // Rear-block constraints |C x(j)| <= x_max for j in [0, N]; the j = 0 term
  // is fixed by the estimate, so it acts as a pre-check.
  if (((c_sel * x_hat).cwiseAbs() - x_max).maxCoeff() > 1e-9) {
    out.status = QpStatus::Infeasible;
    out.feasible = false;
    out.solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return out;
  }

  const int rows = 6 * horizon + 2 * horizon;
  QpProblem qp;
  qp.hessian = hess;
  qp.linear = lin;
  qp.ineq_lhs = Eigen::MatrixXd::Zero(rows, horizon);
  qp.ineq_rhs = Eigen::VectorXd::Zero(rows);
  int row = 0;
  for (int j = 1; j <= horizon; ++j) {
    qp.ineq_lhs.block(row, 0, 3, horizon) = c_sel * sc[j];
    qp.ineq_rhs.segment(row, 3) = x_max - c_sel * base[j];
    row += 3;
    qp.ineq_lhs.block(row, 0, 3, horizon) = -c_sel * sc[j];
    qp.ineq_rhs.segment(row, 3) = x_max + c_sel * base[j];
    row += 3;
  }
  // Total input c(j) + K x(j) within the bound.
  for (int j = 0; j < horizon; ++j) {
    Eigen::RowVectorXd g_row = k * sc[j];
    g_row(j) += 1.0;
    const double k_base = (k * base[j])(0, 0);
    qp.ineq_lhs.row(row) = g_row;
    qp.ineq_rhs(row) = cfg.sets.u_max - k_base;
    ++row;
    qp.ineq_lhs.row(row) = -g_row;
    qp.ineq_rhs(row) = cfg.sets.u_max + k_base;
    ++row;
  }

  const QpResult sol = solve_qp(qp);
  out.status = sol.status;
  out.iterations = sol.iterations;
  if (sol.status == QpStatus::Optimal) {
    out.feasible = true;
    out.sequence = sol.x;
    out.u_hat = sol.x(0);
    out.cost = sol.objective;
  }
  out.solve_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return out;
}

DualLoopCommand dual_loop_control(const Eigen::VectorXd& x, double u_hat,
                                  const Eigen::MatrixXd& k,
                                  const ConstraintSets& sets) {
  DualLoopCommand cmd;
  const double raw = (k * x)(0, 0) + u_hat;
  cmd.tripwire = std::abs(raw) > sets.u_max + 1e-6;
  cmd.u = std::clamp(raw, -sets.u_max, sets.u_max);
  return cmd;
}

void MpcFallback::store(const Eigen::VectorXd& sequence) {
  sequence_ = sequence;
  cursor_ = 1;  // element 0 was applied by the successful solve
}

double MpcFallback::next(const Eigen::MatrixXd& k, const Eigen::VectorXd& x,
                         double u_max) {
  if (has_stored()) {
    const double candidate = sequence_(cursor_);
    ++cursor_;
    if (std::abs(candidate + (k * x)(0, 0)) <= u_max + 1e-9) return candidate;
  }
  return 0.0;
}

}  // namespace platoonlab
