#include "platoonlab/inner_loop.hpp"

#include "platoonlab/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace platoonlab {

DisturbanceBound compute_delta(double u_max, double t_s, double beta1_upper,
                               double tau1_lower) {
  DisturbanceBound b;
  b.beta1_upper = beta1_upper;
  b.tau1_lower = tau1_lower;
  b.delta1 = u_max * t_s;
  b.delta2 = beta1_upper * b.delta1 / tau1_lower;
  b.delta = std::max(b.delta1, b.delta2);
  return b;
}

Eigen::MatrixXd make_disturbance_matrix(int n, double t_s) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3 * n, 2);
  d(0, 0) = t_s;  // leader velocity deviation enters HV 1's gap row
  d(2, 1) = t_s;  // scaled coupling w2 enters HV 1's acceleration row
  return d;
}

Eigen::MatrixXd make_input_matrix(int n, double tau_rear, double t_s) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3 * n, 1);
  b(3 * n - 1, 0) = t_s / tau_rear;
  return b;
}

namespace {

struct ReducedData {
  Eigen::MatrixXd basis;  // T x r, orthonormal columns spanning rowspace of S
  Eigen::MatrixXd m_u;    // U0 * basis
  Eigen::MatrixXd m_0;    // X0 * basis
  Eigen::MatrixXd m_1;    // X1 * basis
  int r = 0;
};

// The decision matrix Y only enters the synthesis through U0*Y, X0*Y, X1*Y
// and Y'Y, so it can be restricted to the row space of the stacked data
// without loss: projecting any feasible Y onto that space preserves the first
// three products and can only shrink Y'Y, which enters the LMI favorably.
ReducedData reduce_data(const DataLog& log) {
  const int t_count = log.samples();
  Eigen::MatrixXd s(log.n_u() + 2 * log.n_x(), t_count);
  s.topRows(log.n_u()) = log.u0;
  s.middleRows(log.n_u(), log.n_x()) = log.x0;
  s.bottomRows(log.n_x()) = log.x1;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(s, Eigen::ComputeThinV);
  const Eigen::VectorXd sv = svd.singularValues();
  const double thresh =
      rank_threshold(sv, static_cast<int>(s.rows()), static_cast<int>(s.cols()));
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > thresh) ++r;

  ReducedData rd;
  rd.r = r;
  rd.basis = svd.matrixV().leftCols(r);
  rd.m_u = log.u0 * rd.basis;
  rd.m_0 = log.x0 * rd.basis;
  rd.m_1 = log.x1 * rd.basis;
  return rd;
}

struct SdpAttempt {
  bool feasible = false;
  Eigen::MatrixXd w_tilde;
  double gamma = 0.0;
  std::string message;
};

SdpAttempt solve_synthesis_sdp(const ReducedData& rd, const Eigen::MatrixXd& d,
                               double delta, int t_count, double epsilon,
                               const InnerLoopOptions& opts) {
  const int n_x = static_cast<int>(rd.m_0.rows());
  const int r = rd.r;
  const double margin = opts.margin;

  LmiProblem prob;
  const int w_var = prob.add_rectangular(r, n_x, "Wt");
  const int gamma_var = prob.add_scalar("gamma");

  const Eigen::MatrixXd eye_x = Eigen::MatrixXd::Identity(n_x, n_x);
  const Eigen::MatrixXd eye_r = Eigen::MatrixXd::Identity(r, r);

  // X0 Y must be a symmetric matrix (it plays the role of P).
  {
    const int eq = prob.add_equality(n_x, n_x, "P symmetric");
    prob.eq_add_term(eq, LmiTerm{w_var, rd.m_0, eye_x, false});
    prob.eq_add_term(eq, LmiTerm{w_var, -eye_x, rd.m_0.transpose(), true});
  }

  // Main robust LMI, block sizes [n_x, n_x, r, n_w].
  const int n_w = static_cast<int>(d.cols());
  const int dim = 2 * n_x + r + n_w;
  const int main_psd = prob.add_psd(dim, "robust stability");
  prob.psd_add_constant(main_psd, 0, 0,
                        -margin * Eigen::MatrixXd::Identity(dim, dim));
  // (1,1) P - gamma I
  prob.psd_add_term(main_psd, 0, 0, LmiTerm{w_var, rd.m_0, eye_x, false});
  prob.psd_add_term(main_psd, 0, 0, LmiTerm{gamma_var, -eye_x, {}, false});
  // (2,1) X1 Y, (2,2) P
  prob.psd_add_term(main_psd, n_x, 0, LmiTerm{w_var, rd.m_1, eye_x, false});
  prob.psd_add_term(main_psd, n_x, n_x, LmiTerm{w_var, rd.m_0, eye_x, false});
  // (3,1) reduced Y factor against (3,3) eps I
  prob.psd_add_term(main_psd, 2 * n_x, 0, LmiTerm{w_var, eye_r, eye_x, false});
  prob.psd_add_constant(main_psd, 2 * n_x, 2 * n_x, epsilon * eye_r);
  // (4,2) Delta' D', (4,4) eps^-1 I
  const double delta_scale = delta * std::sqrt(static_cast<double>(t_count));
  prob.psd_add_constant(main_psd, 2 * n_x + r, n_x,
                        delta_scale * d.transpose());
  prob.psd_add_constant(main_psd, 2 * n_x + r, 2 * n_x + r,
                        (1.0 / epsilon) * Eigen::MatrixXd::Identity(n_w, n_w));

  // P > 0.
  const int p_psd = prob.add_psd(n_x, "P positive definite");
  prob.psd_add_constant(p_psd, 0, 0, -margin * eye_x);
  prob.psd_add_term(p_psd, 0, 0, LmiTerm{w_var, rd.m_0, eye_x, false});

  // 0 < gamma <= gamma_cap.
  const int g_floor = prob.add_psd(1, "gamma floor");
  prob.psd_add_constant(g_floor, 0, 0, Eigen::MatrixXd::Constant(1, 1, -1e-9));
  prob.psd_add_term(g_floor, 0, 0,
                    LmiTerm{gamma_var, Eigen::MatrixXd::Identity(1, 1), {}, false});
  const int g_cap = prob.add_psd(1, "gamma cap");
  prob.psd_add_constant(g_cap, 0, 0,
                        Eigen::MatrixXd::Constant(1, 1, opts.gamma_cap));
  prob.psd_add_term(g_cap, 0, 0,
                    LmiTerm{gamma_var, -Eigen::MatrixXd::Identity(1, 1), {}, false});

  prob.maximize(gamma_var);

  const LmiSolution sol = solve_lmi(prob, opts.lmi);
  SdpAttempt attempt;
  attempt.message = sol.message;
  if (sol.status == LmiStatus::Optimal || sol.status == LmiStatus::Feasible) {
    attempt.feasible = true;
    attempt.w_tilde = sol.values[w_var];
    attempt.gamma = sol.values[gamma_var](0, 0);
  }
  return attempt;
}

// Direct assembly of the full-size block LMI for independent verification.
double full_lmi_min_eig(const DataLog& log, const Eigen::MatrixXd& d,
                        double delta, double epsilon, const Eigen::MatrixXd& p,
                        const Eigen::MatrixXd& y, double gamma) {
  const int n_x = log.n_x();
  const int t_count = log.samples();
  const int n_w = static_cast<int>(d.cols());
  const int dim = 2 * n_x + t_count + n_w;
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(dim, dim);
  f.block(0, 0, n_x, n_x) = p - gamma * Eigen::MatrixXd::Identity(n_x, n_x);
  f.block(0, n_x, n_x, n_x) = (log.x1 * y).transpose();
  f.block(n_x, 0, n_x, n_x) = log.x1 * y;
  f.block(n_x, n_x, n_x, n_x) = p;
  f.block(0, 2 * n_x, n_x, t_count) = y.transpose();
  f.block(2 * n_x, 0, t_count, n_x) = y;
  f.block(2 * n_x, 2 * n_x, t_count, t_count) =
      epsilon * Eigen::MatrixXd::Identity(t_count, t_count);
  const double delta_scale = delta * std::sqrt(static_cast<double>(t_count));
  f.block(n_x, 2 * n_x + t_count, n_x, n_w) = delta_scale * d;
  f.block(2 * n_x + t_count, n_x, n_w, n_x) = delta_scale * d.transpose();
  f.block(2 * n_x + t_count, 2 * n_x + t_count, n_w, n_w) =
      (1.0 / epsilon) * Eigen::MatrixXd::Identity(n_w, n_w);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

std::vector<double> epsilon_schedule(const InnerLoopOptions& opts) {
  std::vector<double> eps = {opts.epsilon};
  if (opts.epsilon_grid) {
    for (double e : {0.01, 0.1, 1.0, 10.0, 100.0}) {
      if (std::abs(e - opts.epsilon) > 1e-15) eps.push_back(e);
    }
  }
  return eps;
}

}  // namespace

InnerLoopGain synthesize_inner(const DataLog& log, const Eigen::MatrixXd& d,
                               const DisturbanceBound& bound,
                               const InnerLoopOptions& opts) {
  const RankReport rank = validate_log(log);
  if (!rank.ok) {
    throw RankDeficientError("X0 row rank " + std::to_string(rank.row_rank) +
                             " < " + std::to_string(log.n_x()) +
                             "; collect more or richer data");
  }

  const ReducedData rd = reduce_data(log);
  SdpAttempt attempt;
  double used_epsilon = opts.epsilon;
  std::string last_message;
  for (double eps : epsilon_schedule(opts)) {
    attempt = solve_synthesis_sdp(rd, d, bound.delta, log.samples(), eps, opts);
    if (attempt.feasible) {
      used_epsilon = eps;
      break;
    }
    last_message = attempt.message;
  }
  if (!attempt.feasible) {
    throw InfeasibleError(
        "synthesis SDP infeasible over the epsilon grid (delta=" +
        std::to_string(bound.delta) +
        "); a longer data record or a smaller disturbance bound may help: " +
        last_message);
  }

  InnerLoopGain gain;
  gain.p = rd.m_0 * attempt.w_tilde;
  gain.p = 0.5 * (gain.p + gain.p.transpose());
  gain.y = rd.basis * attempt.w_tilde;
  gain.g = gain.p.ldlt().solve(gain.y.transpose()).transpose();
  gain.k = log.u0 * gain.g;
  gain.gamma = attempt.gamma;
  gain.epsilon = used_epsilon;
  gain.delta = bound.delta;
  gain.data_hash = data_log_hash(log);

  // Independent verification of the recovered point.
  gain.x0g_identity_error =
      (log.x0 * gain.g - Eigen::MatrixXd::Identity(log.n_x(), log.n_x()))
          .cwiseAbs()
          .maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gain.p,
                                                    Eigen::EigenvaluesOnly);
  const double p_min_eig = es.eigenvalues().minCoeff();
  if (opts.verify_full_lmi) {
    gain.full_lmi_min_eig = full_lmi_min_eig(log, d, bound.delta, used_epsilon,
                                             gain.p, gain.y, gain.gamma);
  } else {
    gain.full_lmi_min_eig = 0.0;
  }
  if (p_min_eig <= 1e-8 || gain.gamma <= 0.0 ||
      gain.x0g_identity_error > 1e-6 ||
      (opts.verify_full_lmi && gain.full_lmi_min_eig < -1e-6)) {
    throw InfeasibleError(
        "synthesis verification failed: min_eig(P)=" + std::to_string(p_min_eig) +
        ", gamma=" + std::to_string(gain.gamma) +
        ", |X0 G - I|=" + std::to_string(gain.x0g_identity_error) +
        ", full LMI min eig=" + std::to_string(gain.full_lmi_min_eig));
  }
  return gain;
}

double inner_control(const Eigen::MatrixXd& k, const Eigen::VectorXd& x) {
  return (k * x)(0, 0);
}

double feasibility_boundary_delta(const DataLog& log, const Eigen::MatrixXd& d,
                                  const DisturbanceBound& bound,
                                  const InnerLoopOptions& opts, int bisections) {
  const ReducedData rd = reduce_data(log);
  double lo = 0.0;
  double hi = bound.delta;
  for (int i = 0; i < bisections; ++i) {
    const double mid = 0.5 * (lo + hi);
    const SdpAttempt attempt =
        solve_synthesis_sdp(rd, d, mid, log.samples(), opts.epsilon, opts);
    if (attempt.feasible) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

void save_inner_gain(const InnerLoopGain& gain, const std::string& path) {
  nlohmann::json j;
  auto mat = [](const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < m.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
      rows.push_back(row);
    }
    return rows;
  };
  j["K"] = mat(gain.k);
  j["P"] = mat(gain.p);
  j["G"] = mat(gain.g);
  j["gamma"] = gain.gamma;
  j["epsilon"] = gain.epsilon;
  j["delta"] = gain.delta;
  j["data_hash"] = gain.data_hash;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write gain file " + path);
  out << j.dump(2) << "\n";
}

InnerLoopGain load_inner_gain(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open gain file " + path);
  nlohmann::json j;
  in >> j;
  auto mat = [](const nlohmann::json& rows) {
    Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (size_t i = 0; i < rows.size(); ++i)
      for (size_t c = 0; c < rows[i].size(); ++c) m(i, c) = rows[i][c];
    return m;
  };
  InnerLoopGain gain;
  gain.k = mat(j.at("K"));
  gain.p = mat(j.at("P"));
  gain.g = mat(j.at("G"));
  gain.gamma = j.at("gamma").get<double>();
  gain.epsilon = j.at("epsilon").get<double>();
  gain.delta = j.value("delta", 0.0);
  gain.data_hash = j.value("data_hash", "");
  return gain;
}

}  // namespace platoonlab
