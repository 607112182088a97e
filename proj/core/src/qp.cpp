#include "platoonlab/qp.hpp"

#include "platoonlab/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace platoonlab {

namespace {

// Largest alpha in (0, 1] with v + alpha*dv >= (1 - fraction)*v elementwise.
double step_to_boundary(const Eigen::VectorXd& v, const Eigen::VectorXd& dv,
                        double fraction = 0.995) {
  double alpha = 1.0;
  for (int i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) alpha = std::min(alpha, -fraction * v(i) / dv(i));
  }
  return alpha;
}

}  // namespace

QpResult solve_qp(const QpProblem& qp, const QpOptions& opts) {
  QpResult res;
  const int n = qp.num_vars();
  const int me = static_cast<int>(qp.eq_lhs.rows());
  const int mi = static_cast<int>(qp.ineq_lhs.rows());

  // Inconsistent equality systems are the common infeasibility mode for the
  // steady-state target problem; detect them before iterating.
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
  if (me > 0) {
    const AffineBasis basis = solve_affine(qp.eq_lhs, qp.eq_rhs, 1e-9);
    if (!basis.consistent) {
      res.status = QpStatus::Infeasible;
      res.message = "equality constraints are inconsistent (residual " +
                    std::to_string(basis.residual) + ")";
      return res;
    }
    x0 = basis.particular;
  }

  Eigen::VectorXd x = x0;
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(me);
  Eigen::VectorXd s = Eigen::VectorXd::Ones(mi);
  Eigen::VectorXd lam = Eigen::VectorXd::Ones(mi);
  if (mi > 0) {
    const Eigen::VectorXd slack0 = qp.ineq_rhs - qp.ineq_lhs * x;
    for (int i = 0; i < mi; ++i) s(i) = std::max(1.0, slack0(i));
  }

  const int kkt_dim = n + me;
  Eigen::MatrixXd kkt(kkt_dim, kkt_dim);
  Eigen::VectorXd rhs(kkt_dim);

  const double bscale =
      1.0 + std::max({qp.linear.size() ? qp.linear.cwiseAbs().maxCoeff() : 0.0,
                      me ? qp.eq_rhs.cwiseAbs().maxCoeff() : 0.0,
                      mi ? qp.ineq_rhs.cwiseAbs().maxCoeff() : 0.0});

  for (int it = 0; it < opts.max_iter; ++it) {
    const Eigen::VectorXd r_dual = qp.hessian * x + qp.linear +
                                   (me ? (qp.eq_lhs.transpose() * nu).eval()
                                       : Eigen::VectorXd::Zero(n)) +
                                   (mi ? (qp.ineq_lhs.transpose() * lam).eval()
                                       : Eigen::VectorXd::Zero(n));
    const Eigen::VectorXd r_eq = me ? (qp.eq_lhs * x - qp.eq_rhs).eval()
                                    : Eigen::VectorXd::Zero(0);
    const Eigen::VectorXd r_in = mi ? (qp.ineq_lhs * x + s - qp.ineq_rhs).eval()
                                    : Eigen::VectorXd::Zero(0);
    const double mu = mi ? s.dot(lam) / mi : 0.0;
    const double kkt_norm =
        std::max({r_dual.lpNorm<Eigen::Infinity>(),
                  me ? r_eq.lpNorm<Eigen::Infinity>() : 0.0,
                  mi ? r_in.lpNorm<Eigen::Infinity>() : 0.0});

    res.iterations = it;
    res.kkt_residual = kkt_norm;
    if (kkt_norm <= opts.tol * bscale && mu <= opts.tol * bscale) {
      res.status = QpStatus::Optimal;
      res.x = x;
      res.objective = 0.5 * x.dot(qp.hessian * x) + qp.linear.dot(x);
      return res;
    }

    // Reduced KKT system: eliminate (ds, dlam) into the x block.
    kkt.setZero();
    kkt.topLeftCorner(n, n) = qp.hessian;
    if (mi > 0) {
      const Eigen::VectorXd w = (lam.array() / s.array()).matrix();
      kkt.topLeftCorner(n, n) +=
          qp.ineq_lhs.transpose() * w.asDiagonal() * qp.ineq_lhs;
    }
    // Regularize the saddle point mildly so the LU stays well posed when the
    // Hessian is only PSD.
    kkt.topLeftCorner(n, n) += 1e-12 * bscale * Eigen::MatrixXd::Identity(n, n);
    if (me > 0) {
      kkt.topRightCorner(n, me) = qp.eq_lhs.transpose();
      kkt.bottomLeftCorner(me, n) = qp.eq_lhs;
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);

    auto solve_direction = [&](const Eigen::VectorXd& r_cent) {
      rhs.head(n) = -r_dual;
      if (mi > 0) {
        // dlam = S^-1 (r_cent - Lam*ds) with ds = -r_in - G dx.
        rhs.head(n) -=
            qp.ineq_lhs.transpose() *
            ((r_cent.array() + lam.array() * r_in.array()) / s.array()).matrix();
      }
      if (me > 0) rhs.tail(me) = -r_eq;
      return lu.solve(rhs).eval();
    };

    // Affine (predictor) direction: r_cent = -S*lam.
    Eigen::VectorXd r_cent_aff = mi ? (-(s.array() * lam.array())).matrix().eval()
                                    : Eigen::VectorXd::Zero(0);
    Eigen::VectorXd sol = solve_direction(r_cent_aff);
    Eigen::VectorXd dx = sol.head(n);
    Eigen::VectorXd ds, dlam;
    double sigma = 0.0;
    if (mi > 0) {
      ds = -r_in - qp.ineq_lhs * dx;
      dlam = ((r_cent_aff.array() - lam.array() * ds.array()) / s.array()).matrix();
      const double alpha_aff =
          std::min(step_to_boundary(s, ds, 1.0), step_to_boundary(lam, dlam, 1.0));
      const double mu_aff = (s + alpha_aff * ds).dot(lam + alpha_aff * dlam) / mi;
      sigma = std::pow(mu_aff / std::max(mu, 1e-300), 3);
      sigma = std::clamp(sigma, 0.0, 1.0);

      // Corrector with Mehrotra second-order term.
      Eigen::VectorXd r_cent =
          (-(s.array() * lam.array()) - ds.array() * dlam.array() + sigma * mu)
              .matrix();
      sol = solve_direction(r_cent);
      dx = sol.head(n);
      ds = -r_in - qp.ineq_lhs * dx;
      dlam = ((r_cent.array() - lam.array() * ds.array()) / s.array()).matrix();
    }
    Eigen::VectorXd dnu = me ? sol.tail(me).eval() : Eigen::VectorXd::Zero(0);

    double alpha = 1.0;
    if (mi > 0) {
      alpha = std::min(step_to_boundary(s, ds), step_to_boundary(lam, dlam));
    }
    x += alpha * dx;
    nu += alpha * dnu;
    if (mi > 0) {
      s += alpha * ds;
      lam += alpha * dlam;
    }
  }

  // No convergence within the cap: a stalled primal residual with a closed
  // complementarity gap indicates conflicting inequalities.
  const Eigen::VectorXd r_in = mi ? (qp.ineq_lhs * x + s - qp.ineq_rhs).eval()
                                  : Eigen::VectorXd::Zero(0);
  const double mu = mi ? s.dot(lam) / mi : 0.0;
  res.x = x;
  if (mi > 0 && mu < 1e-6 * bscale &&
      (qp.ineq_lhs * x - qp.ineq_rhs).maxCoeff() > opts.tol * bscale) {
    res.status = QpStatus::Infeasible;
    res.message = "interior-point iterates stalled against conflicting constraints";
  } else {
    res.status = QpStatus::NumericalFailure;
    res.message = "no convergence within iteration cap";
  }
  return res;
}

}  // namespace platoonlab
