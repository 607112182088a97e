#include "platoonlab/observer.hpp"

#include "platoonlab/linalg.hpp"
#include "platoonlab_oracle/oracle.hpp"
#include "test_helpers.hpp"

#include <gtest/gtest.h>

using namespace platoonlab;

namespace {

struct ObserverFixture {
  platoonlab::testutil::LinearDataFixture data;
  InnerLoopGain gain;
  InternalModel model;
  ObserverGains obs;
};

const ObserverFixture& observer_fixture() {
  static ObserverFixture* fixture = [] {
    auto* f = new ObserverFixture();
    f->data = platoonlab::testutil::make_linear_fixture(500, 0.15, 4242);
    const DisturbanceBound bound =
        compute_delta(f->data.scenario.u_max, f->data.scenario.t_s, 0.5, 0.1);
    f->gain = synthesize_inner(f->data.log, f->data.model.d, bound);
    f->model = build_internal_model(
        f->data.log, f->gain, f->data.model.b, default_b_d(15), default_c_d(15),
        f->data.scenario.t_s);
    f->obs = synthesize_observer(f->model);
    return f;
  }();
  return *fixture;
}

}  // namespace

TEST(DefaultShaping, MatchesDocumentedLayout) {
  const Eigen::MatrixXd b_d = default_b_d(15);
  const Eigen::MatrixXd c_d = default_c_d(15);
  EXPECT_EQ(b_d.rows(), 15);
  EXPECT_EQ(b_d.cols(), 2);
  EXPECT_EQ(b_d.minCoeff(), 1.0);
  EXPECT_EQ(c_d(0, 0), 0.0);
  EXPECT_EQ(c_d(0, 1), 1.0);
  EXPECT_EQ(c_d.bottomRows(14).minCoeff(), 1.0);
}

TEST(InternalModel, BlockStructure) {
  const auto& f = observer_fixture();
  const auto& m = f.model;
  EXPECT_EQ(m.n_xi(), 19);
  // Disturbance chain eigenvalues all at one.
  const Eigen::MatrixXd dist = m.a_xi.bottomRightCorner(4, 4);
  Eigen::EigenSolver<Eigen::MatrixXd> es(dist);
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(std::abs(es.eigenvalues()(i)), 1.0, 1e-12);
  }
  // With zero disturbance states the output is the plain state.
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(19);
  xi.head(15) = Eigen::VectorXd::LinSpaced(15, 1.0, 15.0);
  EXPECT_EQ(((m.c_xi * xi) - xi.head(15)).cwiseAbs().maxCoeff(), 0.0);
  // A_bar is the data-based closed loop.
  EXPECT_EQ((m.a_bar - f.data.log.x1 * f.gain.g).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(m.detectable);
}

TEST(SynthesizeObserver, StabilityAndEquationResiduals) {
  const auto& f = observer_fixture();
  EXPECT_LT(f.obs.error_spectral_radius, 1.0 - 1e-6);
  EXPECT_LE(f.obs.equation_residual, 1e-8);
  EXPECT_GT(f.obs.epsilon_o, 0.0);
  // Defining equations, recomputed here.
  const Eigen::MatrixXd r1 = f.obs.phi * f.model.a_xi - f.obs.n_xi -
                             f.obs.l1 * f.model.c_xi;
  EXPECT_LE(r1.cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE((f.obs.phi * f.model.b_xi - f.obs.g_xi).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE((f.obs.n_xi * f.obs.h_xi - f.obs.l2).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_EQ((f.obs.l - f.obs.l1 - f.obs.l2).cwiseAbs().maxCoeff(), 0.0);
}

TEST(SynthesizeObserver, AutonomousErrorDecays) {
  const auto& f = observer_fixture();
  platoonlab::testutil::Rng rng(55);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd e = rng.vector(19);
    e /= e.norm();
    for (int k = 0; k < 1000; ++k) e = f.obs.n_xi * e;
    EXPECT_LT(e.norm(), 1e-6) << "trial " << trial;
  }
}

TEST(SynthesizeObserver, PoleDiskOptionTightensRadius) {
  const auto& f = observer_fixture();
  ObserverOptions opts;
  opts.pole_disk = true;
  opts.pole_radius = 0.6;
  const ObserverGains tight = synthesize_observer(f.model, opts);
  EXPECT_LE(tight.error_spectral_radius, 0.6 + 1e-6);
}

TEST(Observer, ExactOnInternalModelWithConstantDisturbance) {
  // Driving the internal model itself keeps the plant inside the model class:
  // the estimate must converge to the truth and stay there.
  const auto& f = observer_fixture();
  platoonlab::testutil::Rng rng(77);
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(19);
  xi.head(15) = rng.vector(15, 0.5);
  xi.segment(15, 2) = rng.vector(2, 0.3);  // constant w1 (w2 stays zero)

  ObserverState st = init_observer(f.obs, f.model.c_xi * xi);
  for (int k = 0; k < 4000; ++k) {
    const Eigen::VectorXd y = f.model.c_xi * xi;
    measurement_update(st, f.obs, y);
    const double err = (st.xi_hat - xi).norm();
    if (k >= 3000) {
      EXPECT_LT(err, 1e-9) << "estimate drifted at step " << k;
    }
    time_update(st, f.obs, 0.0, y);
    xi = f.model.a_xi * xi;
  }
}

TEST(Observer, PdLuenbergerReformulationMatches) {
  // With Phi invertible, the recursion and its PD-Luenberger form produce the
  // same estimate sequence on arbitrary input/measurement signals.
  const auto& f = observer_fixture();
  ASSERT_LT(f.obs.phi_condition, 1e8);

  platoonlab::testutil::Rng rng(91);
  const int steps = 200;
  std::vector<Eigen::VectorXd> ys(steps + 1);
  std::vector<double> us(steps);
  for (int k = 0; k <= steps; ++k) ys[k] = rng.vector(15, 2.0);
  for (int k = 0; k < steps; ++k) us[k] = rng.uniform();

  // Path A: the implemented recursion.
  ObserverState st = init_observer(f.obs, ys[0]);
  std::vector<Eigen::VectorXd> xi_a;
  for (int k = 0; k < steps; ++k) {
    measurement_update(st, f.obs, ys[k]);
    xi_a.push_back(st.xi_hat);
    time_update(st, f.obs, us[k], ys[k]);
  }

  // Path B: xi+ = A xi + B u + Phi^-1 L1 e_y(k) + Phi^-1 H e_y(k+1), solved
  // for the implicit e_y(k+1) dependence.
  const Eigen::MatrixXd l_hat = f.obs.phi.lu().solve(f.obs.l1);
  const Eigen::MatrixXd h_hat = f.obs.phi.lu().solve(f.obs.h_xi);
  const Eigen::MatrixXd lhs =
      Eigen::MatrixXd::Identity(19, 19) + h_hat * f.model.c_xi;
  Eigen::VectorXd xi = xi_a.front();
  std::vector<Eigen::VectorXd> xi_b;
  xi_b.push_back(xi);
  for (int k = 0; k + 1 < steps; ++k) {
    const Eigen::VectorXd e_y = ys[k] - f.model.c_xi * xi;
    const Eigen::VectorXd rhs = f.model.a_xi * xi +
                                f.model.b_xi.col(0) * us[k] + l_hat * e_y +
                                h_hat * ys[k + 1];
    xi = lhs.lu().solve(rhs);
    xi_b.push_back(xi);
  }

  double worst = 0.0;
  for (size_t k = 0; k < xi_b.size(); ++k) {
    worst = std::max(worst, (xi_a[k] - xi_b[k]).cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 1e-8);
}

TEST(Observer, DisturbanceEstimateIsW1Component) {
  const auto& f = observer_fixture();
  ObserverState st;
  st.xi_hat = Eigen::VectorXd::LinSpaced(19, 1.0, 19.0);
  st.z = st.xi_hat;
  const Eigen::VectorXd d_hat = lumped_disturbance_estimate(st, 15, 2);
  EXPECT_EQ(d_hat(0), 16.0);
  EXPECT_EQ(d_hat(1), 17.0);
}
