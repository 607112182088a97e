#include "platoonlab/lmi.hpp"

#include "platoonlab/linalg.hpp"
#include "test_helpers.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace platoonlab;

namespace {

Eigen::MatrixXd eye(int n) { return Eigen::MatrixXd::Identity(n, n); }

}  // namespace

TEST(SolveLmi, ScalarCapObjective) {
  // max t s.t. [[1, t], [t, 1]] >= 0, so t* = 1.
  LmiProblem p;
  const int t = p.add_scalar("t");
  const int cons = p.add_psd(2, "corr");
  p.psd_add_constant(cons, 0, 0, eye(2));
  Eigen::MatrixXd offdiag(1, 1);
  offdiag << 1.0;
  p.psd_add_term(cons, 1, 0, LmiTerm{t, offdiag, {}, false});
  p.maximize(t);
  const LmiSolution sol = solve_lmi(p);
  ASSERT_TRUE(sol.status == LmiStatus::Optimal || sol.status == LmiStatus::Feasible);
  EXPECT_NEAR(sol.objective, 1.0, 1e-4);
  EXPECT_GE(sol.min_eig, -1e-9);
}

TEST(SolveLmi, LyapunovFeasibilityForStableMatrix) {
  testutil::Rng rng(21);
  Eigen::MatrixXd a = rng.matrix(5, 5);
  a *= 0.8 / spectral_radius(a);

  LmiProblem p;
  const int p_var = p.add_symmetric(5, "P");
  // P - A' P A >= margin, P >= margin.
  const int decay = p.add_psd(5, "decay");
  p.psd_add_constant(decay, 0, 0, -1e-6 * eye(5));
  p.psd_add_term(decay, 0, 0, LmiTerm{p_var, eye(5), eye(5), false});
  p.psd_add_term(decay, 0, 0, LmiTerm{p_var, -a.transpose(), a, false});
  const int floor = p.add_psd(5, "floor");
  p.psd_add_constant(floor, 0, 0, -1e-6 * eye(5));
  p.psd_add_term(floor, 0, 0, LmiTerm{p_var, eye(5), eye(5), false});
  // Normalize the homogeneous problem.
  const int cap = p.add_psd(5, "cap");
  p.psd_add_constant(cap, 0, 0, 100.0 * eye(5));
  p.psd_add_term(cap, 0, 0, LmiTerm{p_var, -eye(5), eye(5), false});

  const LmiSolution sol = solve_lmi(p);
  ASSERT_EQ(sol.status, LmiStatus::Feasible) << sol.message;
  const Eigen::MatrixXd p_val = sol.values[p_var];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      p_val - a.transpose() * p_val * a);
  EXPECT_GE(es.eigenvalues().minCoeff(), 0.0);
}

TEST(SolveLmi, LyapunovInfeasibleForUnstableMatrix) {
  Eigen::MatrixXd a = 1.05 * eye(3);
  LmiProblem p;
  const int p_var = p.add_symmetric(3, "P");
  const int decay = p.add_psd(3, "decay");
  p.psd_add_constant(decay, 0, 0, -1e-6 * eye(3));
  p.psd_add_term(decay, 0, 0, LmiTerm{p_var, eye(3), eye(3), false});
  p.psd_add_term(decay, 0, 0, LmiTerm{p_var, -a.transpose(), a, false});
  const int floor = p.add_psd(3, "floor");
  p.psd_add_constant(floor, 0, 0, -1e-2 * eye(3));
  p.psd_add_term(floor, 0, 0, LmiTerm{p_var, eye(3), eye(3), false});
  const int cap = p.add_psd(3, "cap");
  p.psd_add_constant(cap, 0, 0, 10.0 * eye(3));
  p.psd_add_term(cap, 0, 0, LmiTerm{p_var, -eye(3), eye(3), false});
  EXPECT_EQ(solve_lmi(p).status, LmiStatus::Infeasible);
}

TEST(SolveLmi, EqualityConstraintsHold) {
  // Find symmetric P >= I with P(0,1) forced to 0.7 by an equality, while
  // maximizing a capped scalar rides along.
  LmiProblem p;
  const int p_var = p.add_symmetric(2, "P");
  const int floor = p.add_psd(2, "floor");
  p.psd_add_constant(floor, 0, 0, -eye(2));
  p.psd_add_term(floor, 0, 0, LmiTerm{p_var, eye(2), eye(2), false});
  const int cap = p.add_psd(2, "cap");
  p.psd_add_constant(cap, 0, 0, 5.0 * eye(2));
  p.psd_add_term(cap, 0, 0, LmiTerm{p_var, -eye(2), eye(2), false});

  const int eq = p.add_equality(1, 1, "pin offdiag");
  Eigen::MatrixXd pick_row(1, 2), pick_col(2, 1);
  pick_row << 1.0, 0.0;
  pick_col << 0.0, 1.0;
  p.eq_add_term(eq, LmiTerm{p_var, pick_row, pick_col, false});
  p.eq_add_constant(eq, Eigen::MatrixXd::Constant(1, 1, -0.7));

  const LmiSolution sol = solve_lmi(p);
  ASSERT_EQ(sol.status, LmiStatus::Feasible) << sol.message;
  EXPECT_NEAR(sol.values[p_var](0, 1), 0.7, 1e-9);
  EXPECT_NEAR(sol.values[p_var](1, 0), 0.7, 1e-9);
  EXPECT_LE(sol.max_eq_residual, 1e-8);
}

TEST(SolveLmi, InconsistentEqualitiesAreInfeasible) {
  LmiProblem p;
  const int s = p.add_scalar("s");
  const int cons = p.add_psd(1, "positivity");
  p.psd_add_term(cons, 0, 0, LmiTerm{s, eye(1), {}, false});
  const int eq1 = p.add_equality(1, 1, "s=1");
  p.eq_add_term(eq1, LmiTerm{s, eye(1), {}, false});
  p.eq_add_constant(eq1, Eigen::MatrixXd::Constant(1, 1, -1.0));
  const int eq2 = p.add_equality(1, 1, "s=2");
  p.eq_add_term(eq2, LmiTerm{s, eye(1), {}, false});
  p.eq_add_constant(eq2, Eigen::MatrixXd::Constant(1, 1, -2.0));
  EXPECT_EQ(solve_lmi(p).status, LmiStatus::Infeasible);
}

TEST(SolveLmi, RectangularVariableAndTransposeTerms) {
  // max t s.t. [[I, X'],[X, I]] >= 0 with X pinned to 0.6*ones by equality;
  // checks the transpose placement path.
  LmiProblem p;
  const int x = p.add_rectangular(2, 3, "X");
  const int t = p.add_scalar("t");
  const int cons = p.add_psd(5, "contraction");
  p.psd_add_constant(cons, 0, 0, eye(3));
  p.psd_add_constant(cons, 3, 3, eye(2));
  p.psd_add_term(cons, 3, 0, LmiTerm{x, eye(2), eye(3), false});
  const int cap = p.add_psd(1, "t cap");
  p.psd_add_constant(cap, 0, 0, Eigen::MatrixXd::Constant(1, 1, 0.25));
  p.psd_add_term(cap, 0, 0, LmiTerm{t, -eye(1), {}, false});
  const int eq = p.add_equality(2, 3, "pin X");
  p.eq_add_term(eq, LmiTerm{x, eye(2), eye(3), false});
  p.eq_add_constant(eq, -0.3 * Eigen::MatrixXd::Ones(2, 3));
  p.maximize(t);

  const LmiSolution sol = solve_lmi(p);
  ASSERT_TRUE(sol.status == LmiStatus::Optimal || sol.status == LmiStatus::Feasible)
      << sol.message;
  EXPECT_LT((sol.values[x] - 0.3 * Eigen::MatrixXd::Ones(2, 3)).cwiseAbs().maxCoeff(),
            1e-8);
  EXPECT_NEAR(sol.objective, 0.25, 1e-5);
}

TEST(VerifyLmi, CatchesViolations) {
  LmiProblem p;
  const int p_var = p.add_symmetric(2, "P");
  const int cons = p.add_psd(2, "floor");
  p.psd_add_constant(cons, 0, 0, -eye(2));
  p.psd_add_term(cons, 0, 0, LmiTerm{p_var, eye(2), eye(2), false});
  std::vector<Eigen::MatrixXd> bad = {0.5 * eye(2)};
  const LmiVerification rep = verify_lmi(p, bad);
  EXPECT_NEAR(rep.min_eig, -0.5, 1e-12);
}

TEST(LmiProblem, DumpIsParsableText) {
  LmiProblem p;
  const int s = p.add_scalar("s");
  const int cons = p.add_psd(1, "pos");
  p.psd_add_term(cons, 0, 0, LmiTerm{s, eye(1), {}, false});
  p.maximize(s);
  std::ostringstream os;
  p.dump(os);
  const std::string text = os.str();
  EXPECT_NE(text.find("%%LmiProblem"), std::string::npos);
  EXPECT_NE(text.find("maximize s"), std::string::npos);
}
