#include "platoonlab/observer.hpp"

#include "platoonlab/linalg.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace platoonlab {

Eigen::MatrixXd default_b_d(int n_x, int n_w) {
  return Eigen::MatrixXd::Ones(n_x, n_w);
}

Eigen::MatrixXd default_c_d(int n_x, int n_w) {
  Eigen::MatrixXd c_d = Eigen::MatrixXd::Ones(n_x, n_w);
  c_d(0, 0) = 0.0;  // first row [0 1], remaining rows all ones
  return c_d;
}

InternalModel build_internal_model(const DataLog& log, const InnerLoopGain& gain,
                                   const Eigen::MatrixXd& b,
                                   const Eigen::MatrixXd& b_d,
                                   const Eigen::MatrixXd& c_d, double t_s) {
  InternalModel m;
  const int n_x = log.n_x();
  const int n_w = static_cast<int>(b_d.cols());
  m.a_bar = log.x1 * gain.g;
  m.b = b;
  m.b_d = b_d;
  m.c_d = c_d;
  m.t_s = t_s;

  const int n_xi = n_x + 2 * n_w;
  m.a_xi = Eigen::MatrixXd::Zero(n_xi, n_xi);
  m.a_xi.topLeftCorner(n_x, n_x) = m.a_bar;
  m.a_xi.block(0, n_x, n_x, n_w) = b_d;
  m.a_xi.block(n_x, n_x, n_w, n_w) = Eigen::MatrixXd::Identity(n_w, n_w);
  m.a_xi.block(n_x, n_x + n_w, n_w, n_w) =
      t_s * Eigen::MatrixXd::Identity(n_w, n_w);
  m.a_xi.block(n_x + n_w, n_x + n_w, n_w, n_w) =
      Eigen::MatrixXd::Identity(n_w, n_w);

  m.b_xi = Eigen::MatrixXd::Zero(n_xi, b.cols());
  m.b_xi.topRows(n_x) = b;

  m.c_xi = Eigen::MatrixXd::Zero(n_x, n_xi);
  m.c_xi.leftCols(n_x) = Eigen::MatrixXd::Identity(n_x, n_x);
  m.c_xi.middleCols(n_x, n_w) = c_d;

  m.detectable = pbh_detectable(m.a_xi, m.c_xi);
  return m;
}

ObserverGains synthesize_observer(const InternalModel& model,
                                  const ObserverOptions& opts) {
  const int n_xi = model.n_xi();
  const int n_y = model.n_x();
  const double margin = opts.margin;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n_xi, n_xi);
  const Eigen::MatrixXd ca = model.c_xi * model.a_xi;

  LmiProblem prob;
  const int p_var = prob.add_symmetric(n_xi, "Po");
  const int h_var = prob.add_rectangular(n_xi, n_y, "Hbar");
  const int l_var = prob.add_rectangular(n_xi, n_y, "Lbar1");
  const int e_var = prob.add_scalar("eps_o");

  // Omega = Po A_xi - Hbar C_xi A_xi - Lbar1 C_xi appears transposed in the
  // (1,2) cell; we place the (2,1) cell and let the assembler mirror it.
  const int main_psd = prob.add_psd(2 * n_xi, "observer stability");
  prob.psd_add_constant(main_psd, 0, 0,
                        -margin * Eigen::MatrixXd::Identity(2 * n_xi, 2 * n_xi));
  prob.psd_add_term(main_psd, 0, 0, LmiTerm{p_var, eye, eye, false});
  prob.psd_add_term(main_psd, 0, 0, LmiTerm{e_var, -eye, {}, false});
  prob.psd_add_term(main_psd, n_xi, 0, LmiTerm{p_var, eye, model.a_xi, false});
  prob.psd_add_term(main_psd, n_xi, 0, LmiTerm{h_var, -eye, ca, false});
  prob.psd_add_term(main_psd, n_xi, 0, LmiTerm{l_var, -eye, model.c_xi, false});
  prob.psd_add_term(main_psd, n_xi, n_xi, LmiTerm{p_var, eye, eye, false});

  const int p_floor = prob.add_psd(n_xi, "Po floor");
  prob.psd_add_constant(p_floor, 0, 0, -margin * eye);
  prob.psd_add_term(p_floor, 0, 0, LmiTerm{p_var, eye, eye, false});

  // The LMI is homogeneous in (Po, Hbar, Lbar1, eps_o); the cap fixes the
  // scale without restricting the recovered gains.
  const int p_cap = prob.add_psd(n_xi, "Po cap");
  prob.psd_add_constant(p_cap, 0, 0, opts.p_cap * eye);
  prob.psd_add_term(p_cap, 0, 0, LmiTerm{p_var, -eye, eye, false});

  const int e_floor = prob.add_psd(1, "eps floor");
  prob.psd_add_constant(e_floor, 0, 0, Eigen::MatrixXd::Constant(1, 1, -1e-9));
  prob.psd_add_term(e_floor, 0, 0,
                    LmiTerm{e_var, Eigen::MatrixXd::Identity(1, 1), {}, false});
  const int e_cap = prob.add_psd(1, "eps cap");
  prob.psd_add_constant(e_cap, 0, 0,
                        Eigen::MatrixXd::Constant(1, 1, opts.epsilon_cap));
  prob.psd_add_term(e_cap, 0, 0,
                    LmiTerm{e_var, -Eigen::MatrixXd::Identity(1, 1), {}, false});

  if (opts.pole_disk) {
    const double r2 = opts.pole_radius * opts.pole_radius;
    const int disk = prob.add_psd(2 * n_xi, "pole disk");
    prob.psd_add_constant(disk, 0, 0,
                          -margin * Eigen::MatrixXd::Identity(2 * n_xi, 2 * n_xi));
    prob.psd_add_term(disk, 0, 0, LmiTerm{p_var, r2 * eye, eye, false});
    prob.psd_add_term(disk, n_xi, 0, LmiTerm{p_var, eye, model.a_xi, false});
    prob.psd_add_term(disk, n_xi, 0, LmiTerm{h_var, -eye, ca, false});
    prob.psd_add_term(disk, n_xi, 0, LmiTerm{l_var, -eye, model.c_xi, false});
    prob.psd_add_term(disk, n_xi, n_xi, LmiTerm{p_var, eye, eye, false});
  }

  prob.maximize(e_var);

  const LmiSolution sol = solve_lmi(prob, opts.lmi);
  if (sol.status != LmiStatus::Optimal && sol.status != LmiStatus::Feasible) {
    throw InfeasibleError(
        "observer SDP failed (" + sol.message +
        "); reconsider the disturbance shaping matrices B_d, C_d");
  }

  ObserverGains g;
  g.p_o = sol.values[p_var];
  g.epsilon_o = sol.values[e_var](0, 0);
  const Eigen::LDLT<Eigen::MatrixXd> p_fact(g.p_o);
  g.h_xi = p_fact.solve(sol.values[h_var]);
  g.l1 = p_fact.solve(sol.values[l_var]);
  g.phi = eye - g.h_xi * model.c_xi;
  g.n_xi = g.phi * model.a_xi - g.l1 * model.c_xi;
  g.g_xi = g.phi * model.b_xi;
  g.l2 = g.n_xi * g.h_xi;
  g.l = g.l1 + g.l2;

  g.error_spectral_radius = spectral_radius(g.n_xi);
  const double r1 =
      (g.phi * model.a_xi - g.n_xi - g.l1 * model.c_xi).cwiseAbs().maxCoeff();
  const double r2 = (g.phi * model.b_xi - g.g_xi).cwiseAbs().maxCoeff();
  const double r3 = (g.n_xi * g.h_xi - g.l2).cwiseAbs().maxCoeff();
  g.equation_residual = std::max({r1, r2, r3});

  Eigen::JacobiSVD<Eigen::MatrixXd> phi_svd(g.phi);
  const double smin = phi_svd.singularValues().minCoeff();
  g.phi_condition =
      smin > 0.0 ? phi_svd.singularValues().maxCoeff() / smin
                 : std::numeric_limits<double>::infinity();

  if (g.error_spectral_radius >= 1.0 - 1e-6 || g.equation_residual > 1e-8) {
    throw InfeasibleError(
        "observer verification failed: rho=" +
        std::to_string(g.error_spectral_radius) +
        ", equation residual=" + std::to_string(g.equation_residual));
  }
  return g;
}

ObserverState init_observer(const ObserverGains& gains,
                            const Eigen::VectorXd& x_measured) {
  const int n_xi = static_cast<int>(gains.n_xi.rows());
  Eigen::VectorXd xi0 = Eigen::VectorXd::Zero(n_xi);
  xi0.head(x_measured.size()) = x_measured;
  ObserverState st;
  st.z = gains.phi * xi0;
  st.xi_hat = xi0;
  return st;
}

void measurement_update(ObserverState& state, const ObserverGains& gains,
                        const Eigen::VectorXd& y) {
  state.xi_hat = state.z + gains.h_xi * y;
}

void time_update(ObserverState& state, const ObserverGains& gains, double u_hat,
                 const Eigen::VectorXd& y) {
  state.z = gains.n_xi * state.z + gains.g_xi.col(0) * u_hat + gains.l * y;
}

ObserverState observer_step(const ObserverState& state, const ObserverGains& gains,
                            double u_hat, const Eigen::VectorXd& y) {
  ObserverState next = state;
  measurement_update(next, gains, y);
  time_update(next, gains, u_hat, y);
  return next;
}

Eigen::VectorXd lumped_disturbance_estimate(const ObserverState& state, int n_x,
                                            int n_w) {
  return state.xi_hat.segment(n_x, n_w);
}

}  // namespace platoonlab
