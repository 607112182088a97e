#include "platoonlab/dare.hpp"

namespace platoonlab {

namespace {

Eigen::MatrixXd riccati_map(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                            const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                            const Eigen::MatrixXd& p) {
  const Eigen::MatrixXd btpb_r = b.transpose() * p * b + r;
  const Eigen::MatrixXd gain = btpb_r.ldlt().solve(b.transpose() * p * a);
  return a.transpose() * p * a - (a.transpose() * p * b) * gain + q;
}

}  // namespace

DareResult dare(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                const DareOptions& opts) {
  DareResult res;
  Eigen::MatrixXd p = q;
  double diff = std::numeric_limits<double>::max();
  int it = 0;
  while (it < opts.max_iter && diff > opts.tol) {
    Eigen::MatrixXd next = riccati_map(a, b, q, r, p);
    next = 0.5 * (next + next.transpose());
    diff = (next - p).cwiseAbs().maxCoeff();
    p = next;
    ++it;
  }
  res.p = p;
  res.iterations = it;
  res.converged = diff <= opts.tol;
  res.residual = (p - riccati_map(a, b, q, r, p)).cwiseAbs().maxCoeff();
  return res;
}

}  // namespace platoonlab
