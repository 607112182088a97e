#pragma once

#include <Eigen/Dense>
#include <string>

namespace platoonlab {

/// Collected platooning-error data: column j of x1 is the error one step
/// after column j of x0 under input column j of u0.
struct DataLog {
  Eigen::MatrixXd u0;  // n_u x T
  Eigen::MatrixXd x0;  // n_x x T
  Eigen::MatrixXd x1;  // n_x x T
  double t_s = 0.05;

  int samples() const { return static_cast<int>(u0.cols()); }
  int n_x() const { return static_cast<int>(x0.rows()); }
  int n_u() const { return static_cast<int>(u0.rows()); }
};

DataLog make_data_log(int n_x, int n_u, double t_s);

/// Appends one (x_k, u_k, x_{k+1}) sample. Throws on dimension mismatch.
void record_sample(DataLog& log, const Eigen::VectorXd& x_k,
                   const Eigen::VectorXd& u_k, const Eigen::VectorXd& x_k1);

struct RankReport {
  int row_rank = 0;
  bool ok = false;
};

/// Full-row-rank check on X0 with the project-wide SVD threshold. T < n_x is
/// immediately not ok.
RankReport validate_log(const DataLog& log);

/// Disturbance samples matching a DataLog. Test/oracle bookkeeping only: the
/// production pipeline never observes w.
struct DisturbanceLog {
  Eigen::MatrixXd w0;  // n_w x T
};

/// CSV persistence. Matrices go out one file per matrix, one sample per row,
/// 17 significant digits, plus a JSON metadata sidecar carrying t_s, T, n_x,
/// the scenario hash and the rear-AV propulsion constant needed for offline
/// synthesis.
struct DataLogMeta {
  double t_s = 0.05;
  int samples = 0;
  int n_x = 0;
  std::string scenario_hash;
  double tau_rear = 0.0;
  double u_max = 0.0;
  int n_vehicles = 0;
};

void save_data_log(const DataLog& log, const DataLogMeta& meta,
                   const std::string& dir);
DataLog load_data_log(const std::string& dir, DataLogMeta* meta = nullptr);

/// FNV-1a over the canonical CSV bytes; ties gains to the data they came from.
std::string data_log_hash(const DataLog& log);

}  // namespace platoonlab
