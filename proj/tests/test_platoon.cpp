#include "platoonlab/platoon.hpp"

#include "platoonlab_oracle/oracle.hpp"
#include "test_helpers.hpp"

#include <gtest/gtest.h>

using namespace platoonlab;

namespace {

// Vehicle states realizing a given error vector around the set point, with
// the leader exactly on the reference.
std::vector<VehicleState> states_from_errors(const PlatoonScenario& sc,
                                             const Eigen::VectorXd& x,
                                             double v_star) {
  const double h_star = setpoint_gap(v_star, sc.policy);
  std::vector<VehicleState> states(sc.vehicles.size());
  states[0] = {1000.0, v_star, 0.0};
  for (int i = 1; i <= sc.n(); ++i) {
    const double gap_ref = (i == sc.n()) ? sc.d_safe : h_star;
    const double gap = gap_ref + x(3 * (i - 1));
    states[i].p = states[i - 1].p - gap;
    states[i].v = v_star + x(3 * (i - 1) + 1);
    states[i].a = x(3 * (i - 1) + 2);
  }
  return states;
}

}  // namespace

TEST(PlatoonErrors, EquilibriumStackIsZero) {
  const PlatoonScenario sc = default_scenario();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(sc.n_x());
  const auto states = states_from_errors(sc, zero, sc.v_nominal);
  EXPECT_LT(platoon_errors(states, sc.v_nominal, sc.policy, sc.d_safe)
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
}

TEST(PlatoonErrors, DefaultInitialStates) {
  const PlatoonScenario sc = default_scenario();
  const Eigen::VectorXd x =
      platoon_errors(sc.initial_states, 20.0, sc.policy, sc.d_safe);
  EXPECT_NEAR(x(0), 20.0 - 27.5, 1e-12);   // first HV gap error
  EXPECT_NEAR(x(12), 25.0 - 20.0, 1e-12);  // rear AV gap error vs d_safe
  EXPECT_NEAR(x(4), -5.0, 1e-12);          // HV 2 velocity error
}

TEST(PlatoonErrors, RearGapUsesDsafe) {
  const PlatoonScenario sc = default_scenario();
  auto states = states_from_errors(sc, Eigen::VectorXd::Zero(sc.n_x()), sc.v_nominal);
  states.back().p -= 1.0;  // open the rear gap by 1 m
  const Eigen::VectorXd x =
      platoon_errors(states, sc.v_nominal, sc.policy, sc.d_safe);
  EXPECT_NEAR(x(sc.n_x() - 3), 1.0, 1e-12);
}

TEST(StepPlatoon, EquilibriumIsInvariant) {
  const PlatoonScenario sc = default_scenario();
  auto states = states_from_errors(sc, Eigen::VectorXd::Zero(sc.n_x()), sc.v_nominal);
  const LeaderGains gains;
  for (int k = 0; k < 200; ++k) {
    const double u0 =
        leader_control(states.front(), sc.v_nominal, gains, sc.u_max);
    states = step_platoon(states, u0, 0.0, sc);
    EXPECT_LT(platoon_errors(states, sc.v_nominal, sc.policy, sc.d_safe)
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12)
        << "at step " << k;
  }
}

TEST(StepPlatoon, GapClosureRaisesCollision) {
  PlatoonScenario sc = default_scenario();
  sc.initial_states[1].p = sc.initial_states[0].p;  // zero gap
  EXPECT_THROW(step_platoon(sc.initial_states, 0.0, 0.0, sc), CollisionError);
}

TEST(StepPlatoon, SimultaneousUpdateReadsPreStepGaps) {
  const PlatoonScenario sc = default_scenario();
  // If updates were sequential, HV 1 would see the leader's fresh position.
  auto states = sc.initial_states;
  const auto next = step_platoon(states, 4.0, 0.0, sc);
  // HV 1's acceleration update depends on the gap 20 m and v_prev = 20.0
  // (pre-step values), not the leader's advanced state.
  VehicleParams hv = sc.vehicles[1];
  const VehicleState expected =
      step_hv(states[1], 20.0, 20.0, hv, sc.policy, sc.t_s);
  EXPECT_NEAR(next[1].a, expected.a, 1e-15);
}

TEST(LeaderControl, TracksAndSaturates) {
  const LeaderGains gains;
  EXPECT_NEAR(leader_control({0, 20, 0}, 20.0, gains, 4.0), 0.0, 1e-15);
  EXPECT_EQ(leader_control({0, 0, 0}, 30.0, gains, 4.0), 4.0);
  EXPECT_EQ(leader_control({0, 30, 0}, 0.0, gains, 4.0), -4.0);
  // Drives v -> v_ref on the AV model.
  VehicleState s{0, 15, 0};
  for (int k = 0; k < 3000; ++k) {
    s = step_av(s, leader_control(s, 20.0, gains, 4.0), 0.1, 0.05);
  }
  EXPECT_NEAR(s.v, 20.0, 1e-6);
}

TEST(OracleModel, StructureMatchesDiscretization) {
  const PlatoonScenario sc = default_scenario();
  const auto model = oracle::build_true_error_model(sc, 20.0);
  EXPECT_EQ(model.n_x, 15);
  EXPECT_EQ(model.n_u, 1);
  EXPECT_EQ(model.n_w, 2);
  // Rear AV lag entry of A = I + t_s A_c.
  EXPECT_NEAR(model.a(14, 14), 1.0 - 0.05 / 0.12, 1e-12);
  // Single nonzero input entry t_s / tau_n in the last row.
  EXPECT_NEAR(model.b(14, 0), 0.05 / 0.12, 1e-12);
  EXPECT_EQ((model.b.topRows(14).array() != 0.0).count(), 0);
  // Disturbance enters HV 1's gap and acceleration rows only.
  EXPECT_NEAR(model.d(0, 0), 0.05, 1e-15);
  EXPECT_NEAR(model.d(2, 1), 0.05, 1e-15);
  EXPECT_EQ((model.d.bottomRows(12).array() != 0.0).count(), 0);
}

TEST(OracleModel, RejectsOutOfRangeSetPoint) {
  const PlatoonScenario sc = default_scenario();
  EXPECT_THROW(oracle::build_true_error_model(sc, 0.0), std::domain_error);
  EXPECT_THROW(oracle::build_true_error_model(sc, 40.0), std::domain_error);
}

TEST(OracleModel, LinearizationMatchesNonlinearStep) {
  // Away from the range policy's inflection point so the curvature term is
  // the dominant nonlinearity.
  const PlatoonScenario sc = default_scenario();
  const double v_star = 15.0;
  const auto model = oracle::build_true_error_model(sc, v_star);
  testutil::Rng rng(13);

  const Eigen::VectorXd direction = rng.vector(sc.n_x());
  double prev_err = -1.0;
  for (const double scale : {0.1, 0.05, 0.025}) {
    Eigen::VectorXd x = direction * (scale / direction.norm());
    auto states = states_from_errors(sc, x, v_star);
    const auto next = step_platoon(states, 0.0, 0.0, sc);
    const Eigen::VectorXd x_next_nl =
        platoon_errors(next, v_star, sc.policy, sc.d_safe);
    const Eigen::VectorXd x_next_lin = model.a * x;
    const double err = (x_next_nl - x_next_lin).cwiseAbs().maxCoeff();
    EXPECT_LE(err, 1e-3) << "scale " << scale;
    if (prev_err > 1e-9) {
      // Quadratic shrink: halving the amplitude divides the error by ~4
      // until rounding noise takes over.
      EXPECT_LT(err, prev_err / 2.5);
    }
    prev_err = err;
  }
}

TEST(OracleModel, LinearRolloutSatisfiesDataIdentity) {
  const auto fixture = platoonlab::testutil::make_linear_fixture(200, 0.1, 99);
  const auto& m = fixture.model;
  const auto& log = fixture.log;
  const Eigen::MatrixXd residual =
      log.x1 - (m.a * log.x0 + m.b * log.u0 + m.d * fixture.w_log.w0);
  EXPECT_LE(residual.cwiseAbs().maxCoeff(), 1e-9);
}
