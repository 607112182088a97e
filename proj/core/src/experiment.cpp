#include "platoonlab/experiment.hpp"

#include "platoonlab/dare.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace platoonlab {

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig cfg;
  cfg.scenario = default_scenario();
  cfg.cycle = synthetic_aggressive_cycle(300.0, 42);
  return cfg;
}

namespace {

double clamped_v_star(double v_ref, const RangePolicy& policy) {
  // Error coordinates need a set point strictly inside the range policy.
  const double lo = 1e-3 * policy.v_max;
  const double hi = policy.v_max * (1.0 - 1e-6);
  return std::clamp(v_ref, lo, hi);
}

struct DualLoopRuntime {
  SynthesisArtifacts art;
  ObserverState obs_state;
  MpcFallback fallback;
};

SynthesisArtifacts synthesize_all(const ExperimentConfig& config,
                                  const DataLog& data) {
  const auto t0 = std::chrono::steady_clock::now();
  const PlatoonScenario& sc = config.scenario;
  const int n = sc.n();

  SynthesisArtifacts art;
  art.bound =
      compute_delta(sc.u_max, sc.t_s, config.beta1_upper, config.tau1_lower);
  const Eigen::MatrixXd d = make_disturbance_matrix(n, sc.t_s);
  art.gain = synthesize_inner(data, d, art.bound, config.inner);

  const Eigen::MatrixXd b = make_input_matrix(n, sc.vehicles.back().tau, sc.t_s);
  art.model = build_internal_model(data, art.gain, b, default_b_d(3 * n),
                                   default_c_d(3 * n), sc.t_s);
  art.observer = synthesize_observer(art.model, config.observer);

  art.mpc = MpcConfig::defaults(3 * n);
  art.mpc.horizon = config.mpc_horizon;
  art.mpc.q = config.q_scale * Eigen::MatrixXd::Identity(3 * n, 3 * n);
  art.mpc.r = config.r_scale * Eigen::MatrixXd::Identity(1, 1);
  art.mpc.q_bar = config.q_bar_scale * Eigen::MatrixXd::Identity(3 * n, 3 * n);
  art.mpc.r_bar = config.r_bar_scale * Eigen::MatrixXd::Identity(1, 1);
  art.mpc.sets.u_max = sc.u_max;
  art.mpc.sets.h_tilde_max = config.h_tilde_max;
  art.mpc.sets.v_tilde_max = config.v_tilde_max;
  art.mpc.target_mode = config.target_mode;

  const DareResult ric = dare(art.model.a_bar, b, art.mpc.q, art.mpc.r);
  if (!ric.converged || ric.residual > 1e-8) {
    throw std::runtime_error(
        "terminal Riccati iteration failed to converge (residual " +
        std::to_string(ric.residual) + ")");
  }
  art.mpc.p_terminal = ric.p;

  art.synthesis_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return art;
}

}  // namespace

SimulationLog run_experiment(const ExperimentConfig& config,
                             ControllerKind kind) {
  const PlatoonScenario& sc = config.scenario;
  {
    const std::string err = sc.validate();
    if (!err.empty()) throw std::invalid_argument("invalid scenario: " + err);
  }
  if (config.cycle.t.size() < 2) {
    throw std::invalid_argument("drive cycle must span a positive duration");
  }
  for (double v : config.cycle.v) {
    if (!(v > 0.0 && v < sc.policy.v_max)) {
      throw std::invalid_argument(
          "drive cycle velocities must stay strictly inside (0, v_max) for "
          "error coordinates to be defined");
    }
  }
  const int total_steps =
      static_cast<int>(std::floor(config.cycle.duration() / sc.t_s));
  if (config.collect_samples >= total_steps) {
    throw std::invalid_argument("cycle too short for the collection phase");
  }

  SimulationLog log;
  log.controller = kind;
  log.scenario_hash = scenario_hash(sc);
  log.cycle_activity_start = config.cycle.activity_start();
  log.u_max = sc.u_max;
  log.data = make_data_log(sc.n_x(), 1, sc.t_s);
  log.rows.reserve(total_steps);

  std::vector<VehicleState> states = sc.initial_states;
  ExcitationDither dither(config.dither_enabled ? config.dither_amplitude : 0.0,
                          config.seed, sc.u_max);
  std::unique_ptr<DualLoopRuntime> dual;

  auto errors_of = [&](const std::vector<VehicleState>& st, double v_ref) {
    return platoon_errors(st, clamped_v_star(v_ref, sc.policy), sc.policy,
                          sc.d_safe);
  };

  for (int k = 0; k < total_steps; ++k) {
    const double t = k * sc.t_s;
    const double v_ref = config.cycle.v_ref(t);
    const bool collecting = k < config.collect_samples;
    const bool baseline = kind == ControllerKind::ACC;

    LogRow row;
    row.t = t;
    row.v_ref = v_ref;
    row.states = states;
    row.errors = errors_of(states, v_ref);
    row.u_leader = leader_control(states.front(), v_ref, config.leader, sc.u_max);

    if (baseline || collecting) {
      const int rear = sc.n();
      const double gap = states[rear - 1].p - states[rear].p;
      const double u_acc = acc_control(gap, states[rear].v, states[rear - 1].v,
                                       config.acc, sc.u_max);
      row.u_rear = dither.apply(u_acc);
      row.phase = 0;
    } else {
      if (!dual) {
        // Phase boundary: synthesize from the collected record, then hand
        // the rear AV to the dual loop starting at this very step.
        dual = std::make_unique<DualLoopRuntime>();
        dual->art = synthesize_all(config, log.data);
        dual->obs_state = init_observer(dual->art.observer, row.errors);
        log.synthesis = dual->art;
        log.collect_end = k;
      }
      auto& rt = *dual;
      const Eigen::VectorXd y = row.errors;
      measurement_update(rt.obs_state, rt.art.observer, y);
      const Eigen::VectorXd d_hat =
          lumped_disturbance_estimate(rt.obs_state, sc.n_x(), 2);

      const TargetResult target =
          solve_steady_state_target(rt.art.model, d_hat, rt.art.mpc);
      row.target_fallback = target.fallback;
      if (target.fallback) ++log.target_fallback_count;

      const MpcResult mpc = solve_mpc(rt.obs_state.xi_hat, target.target,
                                      rt.art.gain.k, rt.art.model, rt.art.mpc);
      row.mpc_status = static_cast<int>(mpc.status);
      row.mpc_seconds = mpc.solve_seconds;
      double u_hat = 0.0;
      if (mpc.feasible) {
        u_hat = mpc.u_hat;
        rt.fallback.store(mpc.sequence);
      } else {
        ++log.mpc_infeasible_count;
        row.mpc_fallback = true;
        u_hat = rt.fallback.next(rt.art.gain.k, y, sc.u_max);
      }
      row.u_hat = u_hat;

      const DualLoopCommand cmd =
          dual_loop_control(y, u_hat, rt.art.gain.k, rt.art.mpc.sets);
      if (cmd.tripwire) ++log.tripwire_count;
      row.u_rear = cmd.u;
      row.xi_hat = rt.obs_state.xi_hat;
      row.target_x_bar = target.target.x_bar;
      row.target_u_bar = target.target.u_bar;
      row.phase = 1;

      time_update(rt.obs_state, rt.art.observer, u_hat, y);
    }

    std::vector<VehicleState> next;
    try {
      next = step_platoon(states, row.u_leader, row.u_rear, sc);
    } catch (const CollisionError& e) {
      log.rows.push_back(row);
      log.collision = true;
      log.abort_reason = e.what();
      return log;
    }

    // Data collection happens for both controllers so the ACC baseline run
    // leaves a usable record behind.
    if (collecting) {
      const double v_ref_next = config.cycle.v_ref((k + 1) * sc.t_s);
      record_sample(log.data, row.errors,
                    Eigen::VectorXd::Constant(1, row.u_rear),
                    errors_of(next, v_ref_next));
    }
    if (baseline && k + 1 == config.collect_samples) log.collect_end = k + 1;

    log.rows.push_back(row);
    states = std::move(next);
  }
  return log;
}

WindowMetrics compute_window_metrics(const SimulationLog& log, double t_begin,
                                     double t_end) {
  WindowMetrics m;
  m.t_begin = t_begin;
  m.t_end = t_end;
  if (log.rows.empty()) return m;
  const int vehicles = static_cast<int>(log.rows.front().states.size());
  m.peak_v_tilde.assign(vehicles, 0.0);

  double spacing_sq = 0.0;
  int count = 0;
  double mpc_total = 0.0;
  int mpc_count = 0;

  for (const auto& row : log.rows) {
    if (row.t < t_begin || row.t > t_end) continue;
    ++count;
    for (int i = 0; i < vehicles; ++i) {
      m.peak_v_tilde[i] =
          std::max(m.peak_v_tilde[i], std::abs(row.states[i].v - row.v_ref));
    }
    const double rear_err = row.errors(row.errors.size() - 3);
    spacing_sq += rear_err * rear_err;
    m.max_rear_spacing_error =
        std::max(m.max_rear_spacing_error, std::abs(rear_err));
    if (std::abs(row.u_rear) > log.u_max + 1e-6) ++m.input_violations;
    if (row.phase == 1) {
      mpc_total += row.mpc_seconds;
      ++mpc_count;
      m.max_mpc_seconds = std::max(m.max_mpc_seconds, row.mpc_seconds);
    }
  }
  if (count > 0) m.rms_rear_spacing_error = std::sqrt(spacing_sq / count);
  if (mpc_count > 0) m.mean_mpc_seconds = mpc_total / mpc_count;
  const double peak_first = m.peak_v_tilde.size() > 1 ? m.peak_v_tilde[1] : 0.0;
  const double peak_last = m.peak_v_tilde.empty() ? 0.0 : m.peak_v_tilde.back();
  if (peak_first > 0.0) {
    m.head_to_tail_ratio = peak_last / peak_first;
    m.head_to_tail_defined = true;
    m.hv_chain_ratio = m.peak_v_tilde[m.peak_v_tilde.size() - 2] / peak_first;
  }
  return m;
}

Metrics compute_metrics(const SimulationLog& log) {
  Metrics m;
  m.collision = log.collision;
  m.tripwire_count = log.tripwire_count;
  if (log.rows.empty()) return m;
  const double t_last = log.rows.back().t;
  const double t_synth = log.collect_end < static_cast<int>(log.rows.size())
                             ? log.rows[log.collect_end].t
                             : t_last;
  m.post_synthesis = compute_window_metrics(log, t_synth, t_last);
  m.cycle = compute_window_metrics(
      log, std::max(t_synth, log.cycle_activity_start), t_last);
  return m;
}

}  // namespace platoonlab
