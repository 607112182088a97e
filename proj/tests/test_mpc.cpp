#include "platoonlab/mpc.hpp"

#include "platoonlab/dare.hpp"
#include "platoonlab/linalg.hpp"
#include "test_helpers.hpp"

#include <gtest/gtest.h>

using namespace platoonlab;

namespace {

struct MpcFixture {
  platoonlab::testutil::LinearDataFixture data;
  InnerLoopGain gain;
  InternalModel model;
  MpcConfig cfg;
};

const MpcFixture& mpc_fixture() {
  static MpcFixture* fixture = [] {
    auto* f = new MpcFixture();
    f->data = platoonlab::testutil::make_linear_fixture(500, 0.15, 909);
    const DisturbanceBound bound =
        compute_delta(f->data.scenario.u_max, f->data.scenario.t_s, 0.5, 0.1);
    f->gain = synthesize_inner(f->data.log, f->data.model.d, bound);
    f->model = build_internal_model(
        f->data.log, f->gain, f->data.model.b, default_b_d(15), default_c_d(15),
        f->data.scenario.t_s);
    f->cfg = MpcConfig::defaults(15);
    f->cfg.sets.u_max = f->data.scenario.u_max;
    const DareResult ric = dare(f->model.a_bar, f->model.b, f->cfg.q, f->cfg.r);
    f->cfg.p_terminal = ric.p;
    return f;
  }();
  return *fixture;
}

Eigen::VectorXd lift(const Eigen::VectorXd& x) {
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(19);
  xi.head(15) = x;
  return xi;
}

}  // namespace

TEST(TerminalWeight, SatisfiesRiccatiResidual) {
  const auto& f = mpc_fixture();
  const DareResult res = dare(f.model.a_bar, f.model.b, f.cfg.q, f.cfg.r);
  ASSERT_TRUE(res.converged);
  EXPECT_LE(res.residual, 1e-8);
}

TEST(SteadyStateTarget, ZeroEstimateGivesOrigin) {
  const auto& f = mpc_fixture();
  const TargetResult res =
      solve_steady_state_target(f.model, Eigen::Vector2d::Zero(), f.cfg);
  ASSERT_FALSE(res.fallback);
  EXPECT_LE(res.target.x_bar.cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_NEAR(res.target.u_bar, 0.0, 1e-7);
}

TEST(SteadyStateTarget, CompensatesConstantDisturbance) {
  const auto& f = mpc_fixture();
  const Eigen::Vector2d d_hat(0.05, -0.03);
  const TargetResult res = solve_steady_state_target(f.model, d_hat, f.cfg);
  ASSERT_FALSE(res.fallback);
  EXPECT_LE(res.eq_residual, 1e-6);
  EXPECT_NE(res.target.u_bar, 0.0);
  // Steady-state equation holds for the returned pair.
  const Eigen::VectorXd lhs =
      (Eigen::MatrixXd::Identity(15, 15) - f.model.a_bar) * res.target.x_bar -
      f.model.b * res.target.u_bar;
  EXPECT_LE((lhs - f.model.b_d * d_hat).cwiseAbs().maxCoeff(), 1e-6);
  // Tracked output: measured rear gap error cancels the shaping feedthrough.
  const Eigen::MatrixXd c_sel = ConstraintSets::selector(15);
  const double tracked =
      (c_sel.topRows(1) * (res.target.x_bar + f.model.c_d * d_hat))(0, 0);
  EXPECT_NEAR(tracked, 0.0, 1e-6);
}

TEST(SteadyStateTarget, RearBlockModeFallsBackForNonzeroEstimate) {
  const auto& f = mpc_fixture();
  MpcConfig cfg = f.cfg;
  cfg.target_mode = TargetMode::RearBlock;
  const TargetResult zero =
      solve_steady_state_target(f.model, Eigen::Vector2d::Zero(), cfg);
  EXPECT_FALSE(zero.fallback);  // the origin satisfies all three rows
  const TargetResult res =
      solve_steady_state_target(f.model, Eigen::Vector2d(0.05, 0.02), cfg);
  EXPECT_TRUE(res.fallback);
  EXPECT_EQ(res.target.x_bar.cwiseAbs().maxCoeff(), 0.0);
}

TEST(SolveMpc, OriginIsOptimalAtEquilibrium) {
  const auto& f = mpc_fixture();
  SteadyStateTarget target;
  target.x_bar = Eigen::VectorXd::Zero(15);
  const MpcResult res =
      solve_mpc(lift(Eigen::VectorXd::Zero(15)), target, f.gain.k, f.model, f.cfg);
  ASSERT_TRUE(res.feasible);
  EXPECT_NEAR(res.u_hat, 0.0, 1e-8);
}

TEST(SolveMpc, UnconstrainedLongHorizonMatchesLqr) {
  const auto& f = mpc_fixture();
  MpcConfig cfg = f.cfg;
  cfg.horizon = 12;
  cfg.sets.u_max = 1e9;
  cfg.sets.h_tilde_max = 1e9;
  cfg.sets.v_tilde_max = 1e9;

  platoonlab::testutil::Rng rng(17);
  const Eigen::VectorXd x = rng.vector(15, 0.5);
  SteadyStateTarget target;
  target.x_bar = Eigen::VectorXd::Zero(15);
  const MpcResult res = solve_mpc(lift(x), target, f.gain.k, f.model, cfg);
  ASSERT_TRUE(res.feasible);

  // Infinite-horizon LQR on the internal model as the oracle; the Riccati
  // terminal weight makes the finite horizon consistent with it.
  const Eigen::MatrixXd p = cfg.p_terminal;
  const Eigen::MatrixXd gain_lqr =
      (f.model.b.transpose() * p * f.model.b + cfg.r)
          .ldlt()
          .solve(f.model.b.transpose() * p * f.model.a_bar);
  const double u_lqr = (-gain_lqr * x)(0, 0);
  EXPECT_NEAR(res.u_hat, u_lqr, 1e-3);
}

TEST(SolveMpc, ActiveInputConstraintIsExact) {
  const auto& f = mpc_fixture();
  // Drive the rear AV block hard enough that the LQR action saturates.
  Eigen::VectorXd x = Eigen::VectorXd::Zero(15);
  x(12) = 10.0;
  x(13) = 5.0;
  MpcConfig cfg = f.cfg;
  cfg.sets.h_tilde_max = 50.0;
  cfg.sets.v_tilde_max = 50.0;
  SteadyStateTarget target;
  target.x_bar = Eigen::VectorXd::Zero(15);
  const MpcResult res = solve_mpc(lift(x), target, f.gain.k, f.model, cfg);
  ASSERT_TRUE(res.feasible);
  const double total = res.u_hat + (f.gain.k * x)(0, 0);
  EXPECT_NEAR(std::abs(total), cfg.sets.u_max, 1e-6);
}

TEST(SolveMpc, StateConstraintViolationAtEstimateIsInfeasible) {
  const auto& f = mpc_fixture();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(15);
  x(12) = f.cfg.sets.h_tilde_max + 1.0;
  SteadyStateTarget target;
  target.x_bar = Eigen::VectorXd::Zero(15);
  const MpcResult res = solve_mpc(lift(x), target, f.gain.k, f.model, f.cfg);
  EXPECT_FALSE(res.feasible);
}

TEST(SolveMpc, DeterministicResolve) {
  const auto& f = mpc_fixture();
  platoonlab::testutil::Rng rng(33);
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(19);
  xi.head(15) = rng.vector(15, 1.0);
  xi.segment(15, 2) = rng.vector(2, 0.1);
  SteadyStateTarget target;
  target.x_bar = Eigen::VectorXd::Zero(15);
  const MpcResult a = solve_mpc(xi, target, f.gain.k, f.model, f.cfg);
  const MpcResult b = solve_mpc(xi, target, f.gain.k, f.model, f.cfg);
  ASSERT_TRUE(a.feasible);
  EXPECT_EQ(a.u_hat, b.u_hat);
}

TEST(SolveMpc, FirstOrderOptimalityUnderFeasiblePerturbations) {
  const auto& f = mpc_fixture();
  platoonlab::testutil::Rng rng(71);
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(19);
  xi.head(15) = rng.vector(15, 0.3);
  SteadyStateTarget target;
  target.x_bar = Eigen::VectorXd::Zero(15);
  const MpcResult res = solve_mpc(xi, target, f.gain.k, f.model, f.cfg);
  ASSERT_TRUE(res.feasible);

  // Reassemble the cost and constraints consistently with the solver path.
  auto cost_of = [&](const Eigen::VectorXd& c) {
    Eigen::VectorXd x = xi.head(15);
    Eigen::VectorXd w1 = xi.segment(15, 2);
    const Eigen::VectorXd w2 = xi.segment(17, 2);
    double j = 0.0;
    Eigen::VectorXd xk = x;
    for (int jdx = 0; jdx < f.cfg.horizon; ++jdx) {
      j += (xk - target.x_bar).dot(f.cfg.q * (xk - target.x_bar));
      j += (c(jdx) - target.u_bar) * f.cfg.r(0, 0) * (c(jdx) - target.u_bar);
      xk = f.model.a_bar * xk + f.model.b.col(0) * c(jdx) +
           f.model.b_d * (w1 + jdx * f.model.t_s * w2);
    }
    j += (xk - target.x_bar).dot(f.cfg.p_terminal * (xk - target.x_bar));
    return j;
  };

  const double j_star = cost_of(res.sequence);
  for (int trial = 0; trial < 16; ++trial) {
    Eigen::VectorXd dir = rng.vector(f.cfg.horizon, 1e-3);
    const Eigen::VectorXd c = res.sequence + dir;
    // Only perturbations that stay inside the input constraint are probed.
    bool ok = true;
    Eigen::VectorXd xk = xi.head(15);
    for (int jdx = 0; jdx < f.cfg.horizon && ok; ++jdx) {
      const double total = c(jdx) + (f.gain.k * xk)(0, 0);
      if (std::abs(total) > f.cfg.sets.u_max) ok = false;
      xk = f.model.a_bar * xk + f.model.b.col(0) * c(jdx) +
           f.model.b_d * (xi.segment(15, 2) + jdx * f.model.t_s * xi.segment(17, 2));
    }
    if (!ok) continue;
    EXPECT_GE(cost_of(c), j_star - 1e-8);
  }
}

TEST(DualLoop, ClampAndTripwire) {
  ConstraintSets sets;
  sets.u_max = 4.0;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(1, 3);
  k(0, 0) = 1.0;
  const DualLoopCommand fine = dual_loop_control(Eigen::Vector3d(1, 0, 0), 0.5,
                                                 k, sets);
  EXPECT_FALSE(fine.tripwire);
  EXPECT_NEAR(fine.u, 1.5, 1e-15);
  const DualLoopCommand hot = dual_loop_control(Eigen::Vector3d(10, 0, 0), 0.0,
                                                k, sets);
  EXPECT_TRUE(hot.tripwire);
  EXPECT_EQ(hot.u, 4.0);
}

TEST(Fallback, ShiftsStoredSequenceThenZero) {
  MpcFallback fb;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(1, 2);
  const Eigen::Vector2d x(0.0, 0.0);
  EXPECT_EQ(fb.next(k, x, 4.0), 0.0);  // nothing stored yet
  Eigen::VectorXd seq(3);
  seq << 1.0, 2.0, 3.0;
  fb.store(seq);
  EXPECT_EQ(fb.next(k, x, 4.0), 2.0);
  EXPECT_EQ(fb.next(k, x, 4.0), 3.0);
  EXPECT_EQ(fb.next(k, x, 4.0), 0.0);  // exhausted
  fb.store(seq);
  EXPECT_EQ(fb.next(k, x, 1.5), 0.0);  // candidate violates the bound
}
