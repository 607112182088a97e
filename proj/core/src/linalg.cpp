#include "platoonlab/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <limits>

namespace platoonlab {

double spectral_radius(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double rank_threshold(const Eigen::VectorXd& singular_values, int rows, int cols) {
  const double sigma_max = singular_values.size() > 0 ? singular_values(0) : 0.0;
  return sigma_max * std::max(rows, cols) *
         std::numeric_limits<double>::epsilon() * 1e3;
}

int numerical_rank(const Eigen::MatrixXd& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd sv = svd.singularValues();
  const double thresh = rank_threshold(sv, static_cast<int>(m.rows()),
                                       static_cast<int>(m.cols()));
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > thresh) ++rank;
  }
  return rank;
}

namespace {

int complex_rank(const Eigen::MatrixXcd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  const Eigen::VectorXd sv = svd.singularValues();
  const double thresh = rank_threshold(sv, static_cast<int>(m.rows()),
                                       static_cast<int>(m.cols()));
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > thresh) ++rank;
  }
  return rank;
}

}  // namespace

bool pbh_detectable(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c,
                    bool continuous_criterion) {
  const int n = static_cast<int>(a.rows());
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, /*computeEigenvectors=*/false);
  const Eigen::VectorXcd eigs = es.eigenvalues();

  Eigen::MatrixXcd stacked(n + c.rows(), n);
  for (int i = 0; i < eigs.size(); ++i) {
    const std::complex<double> lambda = eigs(i);
    const bool unstable = continuous_criterion ? (lambda.real() >= 0.0)
                                               : (std::abs(lambda) >= 1.0 - 1e-9);
    if (!unstable) continue;
    stacked.topRows(n) =
        lambda * Eigen::MatrixXcd::Identity(n, n) - a.cast<std::complex<double>>();
    stacked.bottomRows(c.rows()) = c.cast<std::complex<double>>();
    if (complex_rank(stacked) < n) return false;
  }
  return true;
}

AffineBasis solve_affine(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                         double tol) {
  AffineBasis out;
  const int cols = static_cast<int>(a.cols());
  if (a.rows() == 0) {
    out.particular = Eigen::VectorXd::Zero(cols);
    out.nullspace = Eigen::MatrixXd::Identity(cols, cols);
    out.consistent = true;
    return out;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  const double thresh = rank_threshold(sv, static_cast<int>(a.rows()), cols);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > thresh) ++rank;
  }

  // Minimum-norm solution through the truncated pseudoinverse.
  Eigen::VectorXd utb = svd.matrixU().transpose() * b;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(svd.matrixV().cols());
  for (int i = 0; i < rank; ++i) w(i) = utb(i) / sv(i);
  out.particular = svd.matrixV() * w;
  out.nullspace = svd.matrixV().rightCols(cols - rank);
  out.residual = (a * out.particular - b).norm();
  out.consistent = out.residual <= tol * (1.0 + b.norm());
  return out;
}

}  // namespace platoonlab
