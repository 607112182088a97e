#include <benchmark/benchmark.h>

#include "platoonlab/dare.hpp"
#include "platoonlab/experiment.hpp"
#include "platoonlab/mpc.hpp"
#include "platoonlab/observer.hpp"
#include "platoonlab/platoon.hpp"
#include "platoonlab_oracle/oracle.hpp"

namespace {

using namespace platoonlab;

// One synthesized pipeline shared across the per-step benchmarks.
struct Pipeline {
  PlatoonScenario scenario;
  oracle::LinearErrorModel truth;
  InnerLoopGain gain;
  InternalModel model;
  ObserverGains obs;
  MpcConfig cfg;
};

const Pipeline& pipeline() {
  static Pipeline* p = [] {
    auto* pl = new Pipeline();
    pl->scenario = default_scenario();
    pl->truth = oracle::build_true_error_model(pl->scenario, 20.0);

    ExperimentConfig cfg = ExperimentConfig::defaults();
    cfg.cycle = synthetic_aggressive_cycle(40.0, 42);
    cfg.collect_samples = 500;
    // Reuse the harness collection phase through a plain ACC run.
    SimulationLog log = run_experiment(cfg, ControllerKind::ACC);

    const DisturbanceBound bound =
        compute_delta(pl->scenario.u_max, pl->scenario.t_s, 0.5, 0.1);
    pl->gain = synthesize_inner(
        log.data, make_disturbance_matrix(pl->scenario.n(), pl->scenario.t_s),
        bound);
    pl->model = build_internal_model(
        log.data, pl->gain,
        make_input_matrix(pl->scenario.n(), pl->scenario.vehicles.back().tau,
                          pl->scenario.t_s),
        default_b_d(15), default_c_d(15), pl->scenario.t_s);
    pl->obs = synthesize_observer(pl->model);
    pl->cfg = MpcConfig::defaults(15);
    pl->cfg.sets.u_max = pl->scenario.u_max;
    pl->cfg.p_terminal =
        dare(pl->model.a_bar, pl->model.b, pl->cfg.q, pl->cfg.r).p;
    return pl;
  }();
  return *p;
}

void BM_PlatoonStep(benchmark::State& state) {
  const PlatoonScenario sc = default_scenario();
  std::vector<VehicleState> states = sc.initial_states;
  for (auto _ : state) {
    benchmark::DoNotOptimize(states = step_platoon(states, 0.1, -0.1, sc));
  }
}
BENCHMARK(BM_PlatoonStep);

void BM_Dare15(benchmark::State& state) {
  const auto& p = pipeline();
  for (auto _ : state) {
    benchmark::DoNotOptimize(dare(p.model.a_bar, p.model.b, p.cfg.q, p.cfg.r));
  }
}
BENCHMARK(BM_Dare15);

void BM_ObserverStep(benchmark::State& state) {
  const auto& p = pipeline();
  ObserverState st = init_observer(p.obs, Eigen::VectorXd::Zero(15));
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(15, 0.1);
  for (auto _ : state) {
    st = observer_step(st, p.obs, 0.05, y);
    benchmark::DoNotOptimize(st.xi_hat);
  }
}
BENCHMARK(BM_ObserverStep);

void BM_TargetSolve(benchmark::State& state) {
  const auto& p = pipeline();
  const Eigen::Vector2d d_hat(0.02, -0.01);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_steady_state_target(p.model, d_hat, p.cfg));
  }
}
BENCHMARK(BM_TargetSolve);

void BM_MpcSolve(benchmark::State& state) {
  const auto& p = pipeline();
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(19);
  xi(12) = 2.0;
  xi(13) = -0.5;
  SteadyStateTarget target;
  target.x_bar = Eigen::VectorXd::Zero(15);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_mpc(xi, target, p.gain.k, p.model, p.cfg));
  }
}
BENCHMARK(BM_MpcSolve);

void BM_InnerSynthesis(benchmark::State& state) {
  const auto& p = pipeline();
  ExperimentConfig cfg = ExperimentConfig::defaults();
  cfg.cycle = synthetic_aggressive_cycle(40.0, 42);
  SimulationLog log = run_experiment(cfg, ControllerKind::ACC);
  const DisturbanceBound bound =
      compute_delta(p.scenario.u_max, p.scenario.t_s, 0.5, 0.1);
  const Eigen::MatrixXd d =
      make_disturbance_matrix(p.scenario.n(), p.scenario.t_s);
  for (auto _ : state) {
    benchmark::DoNotOptimize(synthesize_inner(log.data, d, bound));
  }
}
BENCHMARK(BM_InnerSynthesis)->Unit(benchmark::kSecond)->Iterations(1);

}  // namespace
