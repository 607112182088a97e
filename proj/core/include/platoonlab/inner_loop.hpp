#pragma once

#include "platoonlab/data_log.hpp"
#include "platoonlab/lmi.hpp"

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace platoonlab {

class RankDeficientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Componentwise disturbance bound |w| <= delta derived from the input limit
/// and the assumed envelope of HV 1's relative-velocity gain and propulsion
/// constant.
struct DisturbanceBound {
  double delta = 0.0;
  double delta1 = 0.0;  // u_max * t_s, bound on the leader velocity deviation
  double delta2 = 0.0;  // beta1_upper * delta1 / tau1_lower
  double beta1_upper = 0.5;
  double tau1_lower = 0.1;
};

DisturbanceBound compute_delta(double u_max, double t_s, double beta1_upper,
                               double tau1_lower);

/// Known-structure matrices of the discretized error system. The disturbance
/// matrix couples the leader only into HV 1's rows; the input matrix only
/// into the rear AV block, through its (known) propulsion constant.
Eigen::MatrixXd make_disturbance_matrix(int n_vehicles_behind_leader, double t_s);
Eigen::MatrixXd make_input_matrix(int n_vehicles_behind_leader, double tau_rear,
                                  double t_s);

/// Result of the data-driven state-feedback synthesis.
struct InnerLoopGain {
  Eigen::MatrixXd k;      // 1 x n_x
  Eigen::MatrixXd p;      // n_x x n_x, positive definite
  Eigen::MatrixXd y;      // T x n_x
  Eigen::MatrixXd g;      // T x n_x, Y P^-1; satisfies X0 G = I
  double gamma = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  std::string data_hash;

  // Independent verification results, filled by synthesize_inner.
  double full_lmi_min_eig = 0.0;
  double x0g_identity_error = 0.0;
};

struct InnerLoopOptions {
  double epsilon = 1.0;
  bool epsilon_grid = true;  // retry over {0.01, 0.1, 1, 10, 100} on infeasibility
  double gamma_cap = 1.0;
  double margin = 1e-6;       // strict-inequality shift
  bool verify_full_lmi = true;
  LmiOptions lmi;
};

/// Solves the synthesis SDP
///   max gamma  s.t.  P > 0, gamma > 0, X0 Y = P, and the robust block LMI
/// with Delta = delta sqrt(T) I, then recovers K = U0 Y P^-1. The constraints
/// are re-verified independently on the full-size LMI before returning.
/// Throws RankDeficientError or InfeasibleError.
InnerLoopGain synthesize_inner(const DataLog& log, const Eigen::MatrixXd& d,
                               const DisturbanceBound& bound,
                               const InnerLoopOptions& opts = {});

/// u = K x.
double inner_control(const Eigen::MatrixXd& k, const Eigen::VectorXd& x);

/// Bisection on the disturbance bound locating the feasibility boundary;
/// diagnostic support for infeasible synthesis reports (never used to relax
/// the bound silently).
double feasibility_boundary_delta(const DataLog& log, const Eigen::MatrixXd& d,
                                  const DisturbanceBound& bound,
                                  const InnerLoopOptions& opts, int bisections = 8);

void save_inner_gain(const InnerLoopGain& gain, const std::string& path);
InnerLoopGain load_inner_gain(const std::string& path);

}  // namespace platoonlab
