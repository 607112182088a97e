#include "platoonlab/lmi.hpp"

#include "platoonlab/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <ostream>

namespace platoonlab {

int LmiProblem::add_symmetric(int n, std::string name) {
  Var v{LmiVarKind::Symmetric, n, n, std::move(name), num_components_,
        n * (n + 1) / 2};
  num_components_ += v.dim;
  vars_.push_back(std::move(v));
  return static_cast<int>(vars_.size()) - 1;
}

int LmiProblem::add_rectangular(int rows, int cols, std::string name) {
  Var v{LmiVarKind::Rectangular, rows, cols, std::move(name), num_components_,
        rows * cols};
  num_components_ += v.dim;
  vars_.push_back(std::move(v));
  return static_cast<int>(vars_.size()) - 1;
}

int LmiProblem::add_scalar(std::string name) {
  Var v{LmiVarKind::Scalar, 1, 1, std::move(name), num_components_, 1};
  num_components_ += 1;
  vars_.push_back(std::move(v));
  return static_cast<int>(vars_.size()) - 1;
}

int LmiProblem::add_psd(int n, std::string name) {
  psd_.push_back(Psd{n, std::move(name), {}});
  return static_cast<int>(psd_.size()) - 1;
}

void LmiProblem::psd_add_constant(int cons, int row, int col,
                                  const Eigen::MatrixXd& c) {
  Cell cell;
  cell.row = row;
  cell.col = col;
  cell.rows = static_cast<int>(c.rows());
  cell.cols = static_cast<int>(c.cols());
  cell.constant = c;
  psd_[cons].cells.push_back(std::move(cell));
}

void LmiProblem::psd_add_term(int cons, int row, int col, LmiTerm term) {
  const Var& v = vars_[term.var];
  Cell cell;
  cell.row = row;
  cell.col = col;
  if (v.kind == LmiVarKind::Scalar) {
    cell.rows = static_cast<int>(term.left.rows());
    cell.cols = static_cast<int>(term.left.cols());
  } else {
    cell.rows = static_cast<int>(term.left.rows());
    cell.cols = static_cast<int>(term.right.cols());
  }
  cell.terms.push_back(std::move(term));
  psd_[cons].cells.push_back(std::move(cell));
}

int LmiProblem::add_equality(int rows, int cols, std::string name) {
  Equality eq;
  eq.rows = rows;
  eq.cols = cols;
  eq.name = std::move(name);
  eq.constant = Eigen::MatrixXd::Zero(rows, cols);
  eqs_.push_back(std::move(eq));
  return static_cast<int>(eqs_.size()) - 1;
}

void LmiProblem::eq_add_constant(int eq, const Eigen::MatrixXd& c) {
  eqs_[eq].constant += c;
}

void LmiProblem::eq_add_term(int eq, LmiTerm term) {
  eqs_[eq].terms.push_back(std::move(term));
}

void LmiProblem::maximize(int scalar_var) { objective_var_ = scalar_var; }

namespace {

// Column-major flat index inside an n x n matrix.
inline int flat(int i, int j, int n) { return j * n + i; }

// Enumerates the scalar components of a variable as elementary matrices and
// hands (component index, p, q, is_diag) to the callback. Symmetric variables
// use the basis E_pq + E_qp over p <= q.
template <typename F>
void for_each_component(const LmiProblem::Var& v, F&& fn) {
  if (v.kind == LmiVarKind::Scalar) {
    fn(0, 0, 0, true);
    return;
  }
  if (v.kind == LmiVarKind::Rectangular) {
    int k = 0;
    for (int q = 0; q < v.cols; ++q)
      for (int p = 0; p < v.rows; ++p) fn(k++, p, q, true);
    return;
  }
  int k = 0;
  for (int q = 0; q < v.rows; ++q)
    for (int p = 0; p <= q; ++p) fn(k++, p, q, p == q);
}

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Block {
  int n = 0;
  Eigen::VectorXd f0;  // n^2, column-major vec
  RowMat fmat;         // m x n^2, row i = vec(F_i); row-major so rows are
                       // contiguous for the per-row Map in the Hessian pass
};

struct Cone {
  int m = 0;
  std::vector<Block> blocks;
  double total_dim() const {
    double nu = 0;
    for (const auto& b : blocks) nu += b.n;
    return nu;
  }
};

// Adds M into a flattened (column-major) n x n matrix at block position
// (r0, c0), plus the mirrored transpose when r0 != c0.
template <typename RowXpr>
void scatter(RowXpr row, int n, int r0, int c0, const Eigen::MatrixXd& m_cell,
             bool mirror) {
  for (int j = 0; j < m_cell.cols(); ++j)
    for (int i = 0; i < m_cell.rows(); ++i)
      row(flat(r0 + i, c0 + j, n)) += m_cell(i, j);
  if (mirror) {
    for (int j = 0; j < m_cell.cols(); ++j)
      for (int i = 0; i < m_cell.rows(); ++i)
        row(flat(c0 + j, r0 + i, n)) += m_cell(i, j);
  }
}

// Raw (unreduced) cone assembly over all scalar components.
Cone assemble_cone(const LmiProblem& p) {
  Cone cone;
  cone.m = p.num_components();
  for (const auto& psd : p.psd_constraints()) {
    Block b;
    b.n = psd.size;
    b.f0 = Eigen::VectorXd::Zero(b.n * b.n);
    b.fmat = RowMat::Zero(cone.m, b.n * b.n);
    for (const auto& cell : psd.cells) {
      const bool mirror = cell.row != cell.col;
      if (cell.constant.size() > 0) {
        scatter(b.f0.transpose(), b.n, cell.row, cell.col, cell.constant, mirror);
      }
      for (const auto& term : cell.terms) {
        const auto& v = p.vars()[term.var];
        if (v.kind == LmiVarKind::Scalar) {
          scatter(b.fmat.row(v.offset), b.n, cell.row, cell.col, term.left,
                  mirror);
          continue;
        }
        for_each_component(v, [&](int k, int pp, int qq, bool diag) {
          // left * E_pq * right = left.col(p) * right.row(q)
          auto rank1 = [&](int a, int bcol) -> Eigen::MatrixXd {
            return term.left.col(a) * term.right.row(bcol);
          };
          Eigen::MatrixXd contrib;
          if (v.kind == LmiVarKind::Rectangular) {
            contrib = term.transpose ? rank1(qq, pp) : rank1(pp, qq);
          } else {
            contrib = rank1(pp, qq);
            if (!diag) contrib += rank1(qq, pp);
          }
          scatter(b.fmat.row(v.offset + k), b.n, cell.row, cell.col, contrib,
                  mirror);
        });
      }
    }
    cone.blocks.push_back(std::move(b));
  }
  return cone;
}

// Equality system A x = b over raw components.
void assemble_equalities(const LmiProblem& p, Eigen::MatrixXd& a,
                         Eigen::VectorXd& rhs) {
  int rows = 0;
  for (const auto& eq : p.equalities()) rows += eq.rows * eq.cols;
  a = Eigen::MatrixXd::Zero(rows, p.num_components());
  rhs = Eigen::VectorXd::Zero(rows);
  int r0 = 0;
  for (const auto& eq : p.equalities()) {
    for (int j = 0; j < eq.cols; ++j)
      for (int i = 0; i < eq.rows; ++i)
        rhs(r0 + j * eq.rows + i) = -eq.constant(i, j);
    for (const auto& term : eq.terms) {
      const auto& v = p.vars()[term.var];
      if (v.kind == LmiVarKind::Scalar) {
        for (int j = 0; j < eq.cols; ++j)
          for (int i = 0; i < eq.rows; ++i)
            a(r0 + j * eq.rows + i, v.offset) += term.left(i, j);
        continue;
      }
      for_each_component(v, [&](int k, int pp, int qq, bool diag) {
        auto add = [&](int pa, int qb) {
          const Eigen::MatrixXd contrib =
              term.left.col(pa) * term.right.row(qb);
          for (int j = 0; j < eq.cols; ++j)
            for (int i = 0; i < eq.rows; ++i)
              a(r0 + j * eq.rows + i, v.offset + k) += contrib(i, j);
        };
        if (v.kind == LmiVarKind::Rectangular) {
          term.transpose ? add(qq, pp) : add(pp, qq);
        } else {
          add(pp, qq);
          if (!diag) add(qq, pp);
        }
      });
    }
    r0 += eq.rows * eq.cols;
  }
}

struct BarrierState {
  std::vector<Eigen::LLT<Eigen::MatrixXd>> llts;
  bool factorize(const Cone& cone, const Eigen::VectorXd& z) {
    llts.resize(cone.blocks.size());
    for (size_t b = 0; b < cone.blocks.size(); ++b) {
      const auto& blk = cone.blocks[b];
      Eigen::VectorXd fv = blk.f0 + blk.fmat.transpose() * z;
      Eigen::Map<const Eigen::MatrixXd> f(fv.data(), blk.n, blk.n);
      llts[b].compute(f);
      if (llts[b].info() != Eigen::Success) return false;
    }
    return true;
  }
  double log_det() const {
    double v = 0;
    for (const auto& llt : llts) {
      v += 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    }
    return v;
  }
};

struct NewtonWork {
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  RowMat sig;  // per-block workspace, m x n^2
};

// Gradient/Hessian of -log det F(z) accumulated over blocks.
void barrier_derivatives(const Cone& cone, const BarrierState& st,
                         NewtonWork& w) {
  const int m = cone.m;
  w.grad = Eigen::VectorXd::Zero(m);
  w.hess = Eigen::MatrixXd::Zero(m, m);
  for (size_t b = 0; b < cone.blocks.size(); ++b) {
    const auto& blk = cone.blocks[b];
    const int n = blk.n;
    const auto& llt = st.llts[b];
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
    w.grad -= blk.fmat * Eigen::Map<const Eigen::VectorXd>(inv.data(), n * n);

    w.sig.resize(m, n * n);
    const Eigen::MatrixXd l = llt.matrixL();
    Eigen::MatrixXd fi(n, n), si(n, n);
    for (int i = 0; i < m; ++i) {
      fi = Eigen::Map<const Eigen::MatrixXd>(blk.fmat.row(i).data(), n, n);
      si = l.triangularView<Eigen::Lower>().solve(fi);
      si = l.triangularView<Eigen::Lower>().solve(si.transpose().eval());
      w.sig.row(i) = Eigen::Map<const Eigen::VectorXd>(si.data(), n * n);
    }
    w.hess.noalias() += w.sig * w.sig.transpose();
  }
}

struct NewtonOutcome {
  bool centered = false;
  bool stalled = false;
  int steps = 0;
};

// Minimizes t * obj'z... objective passed as minimize c'z: psi = c'z - logdet.
NewtonOutcome newton_minimize(const Cone& cone, const Eigen::VectorXd& c,
                              Eigen::VectorXd& z, const LmiOptions& opts,
                              int step_budget) {
  NewtonOutcome out;
  BarrierState st;
  NewtonWork w;
  if (!st.factorize(cone, z)) {
    out.stalled = true;
    return out;
  }
  double psi = c.dot(z) - st.log_det();
  for (int it = 0; it < step_budget; ++it) {
    barrier_derivatives(cone, st, w);
    Eigen::VectorXd g = c + w.grad;
    Eigen::MatrixXd h = w.hess;
    const double ridge = 1e-13 * (h.trace() / h.rows() + 1.0);
    h.diagonal().array() += ridge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    Eigen::VectorXd step = -ldlt.solve(g);
    double decrement = -g.dot(step);
    if (!(decrement > 0)) {
      // Fall back to a heavily damped solve if the Hessian went indefinite
      // through rounding.
      h.diagonal().array() += 1e-6 * (h.trace() / h.rows() + 1.0);
      step = -h.ldlt().solve(g);
      decrement = -g.dot(step);
      if (!(decrement > 0)) {
        out.stalled = true;
        return out;
      }
    }
    out.steps = it + 1;
    if (0.5 * decrement <= opts.newton_tol) {
      out.centered = true;
      return out;
    }
    // Backtracking: feasibility via Cholesky, then simple decrease.
    double alpha = 1.0;
    bool accepted = false;
    BarrierState trial;
    for (int ls = 0; ls < 60; ++ls) {
      Eigen::VectorXd zt = z + alpha * step;
      if (trial.factorize(cone, zt)) {
        const double psi_t = c.dot(zt) - trial.log_det();
        if (psi_t <= psi - 1e-4 * alpha * decrement) {
          z = zt;
          psi = psi_t;
          st = trial;
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      out.stalled = true;
      return out;
    }
  }
  return out;
}

}  // namespace

LmiVerification verify_lmi(const LmiProblem& p,
                           const std::vector<Eigen::MatrixXd>& values) {
  LmiVerification rep;
  rep.min_eig = std::numeric_limits<double>::infinity();

  auto term_value = [&](const LmiTerm& t) -> Eigen::MatrixXd {
    const auto& v = p.vars()[t.var];
    if (v.kind == LmiVarKind::Scalar) return values[t.var](0, 0) * t.left;
    const Eigen::MatrixXd x =
        t.transpose ? values[t.var].transpose() : values[t.var];
    return t.left * x * t.right;
  };

  for (const auto& psd : p.psd_constraints()) {
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(psd.size, psd.size);
    for (const auto& cell : psd.cells) {
      Eigen::MatrixXd m_cell = Eigen::MatrixXd::Zero(cell.rows, cell.cols);
      if (cell.constant.size() > 0) m_cell += cell.constant;
      for (const auto& t : cell.terms) m_cell += term_value(t);
      f.block(cell.row, cell.col, cell.rows, cell.cols) += m_cell;
      if (cell.row != cell.col) {
        f.block(cell.col, cell.row, cell.cols, cell.rows) +=
            m_cell.transpose();
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f,
                                                      Eigen::EigenvaluesOnly);
    const double eig = es.eigenvalues().minCoeff();
    rep.psd_min_eigs.push_back(eig);
    rep.min_eig = std::min(rep.min_eig, eig);
  }
  if (p.psd_constraints().empty()) rep.min_eig = 0.0;

  for (const auto& eq : p.equalities()) {
    Eigen::MatrixXd r = eq.constant;
    for (const auto& t : eq.terms) r += term_value(t);
    rep.max_eq_residual =
        std::max(rep.max_eq_residual, r.cwiseAbs().maxCoeff());
  }
  return rep;
}

LmiSolution solve_lmi(const LmiProblem& p, const LmiOptions& opts) {
  const auto t_start = std::chrono::steady_clock::now();
  LmiSolution sol;

  Cone raw = assemble_cone(p);

  // Equality elimination: x = x0 + N z.
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(raw.m);
  Eigen::MatrixXd nullsp;
  bool reduced = false;
  if (p.num_equalities() > 0) {
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    assemble_equalities(p, a, b);
    const AffineBasis basis = solve_affine(a, b, 1e-10);
    if (!basis.consistent) {
      sol.status = LmiStatus::Infeasible;
      sol.message = "equality constraints are inconsistent";
      return sol;
    }
    x0 = basis.particular;
    nullsp = basis.nullspace;
    reduced = true;
  }

  Cone cone;
  cone.m = reduced ? static_cast<int>(nullsp.cols()) : raw.m;
  for (auto& blk : raw.blocks) {
    Block rb;
    rb.n = blk.n;
    rb.f0 = blk.f0 + blk.fmat.transpose() * x0;
    if (reduced) {
      rb.fmat = nullsp.transpose() * blk.fmat;
    } else {
      rb.fmat = std::move(blk.fmat);
    }
    cone.blocks.push_back(std::move(rb));
  }

  Eigen::VectorXd c_obj = Eigen::VectorXd::Zero(cone.m);
  if (p.objective_var() >= 0) {
    Eigen::VectorXd c_raw = Eigen::VectorXd::Zero(raw.m);
    c_raw(p.vars()[p.objective_var()].offset) = 1.0;
    c_obj = reduced ? (nullsp.transpose() * c_raw).eval() : c_raw;
  }

  Eigen::VectorXd z = Eigen::VectorXd::Zero(cone.m);
  int steps_used = 0;

  // Phase 1: maximize a uniform margin s with F(z) - s I >= 0 until the
  // iterate is strictly feasible or the optimal margin proves infeasibility.
  double lambda_min0 = std::numeric_limits<double>::infinity();
  {
    for (const auto& blk : cone.blocks) {
      Eigen::Map<const Eigen::MatrixXd> f(blk.f0.data(), blk.n, blk.n);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f,
                                                        Eigen::EigenvaluesOnly);
      lambda_min0 = std::min(lambda_min0, es.eigenvalues().minCoeff());
    }
  }
  const double phase1_exit = 1e-7;
  double margin = lambda_min0;
  if (lambda_min0 <= phase1_exit) {
    Cone aug;
    aug.m = cone.m + 1;
    for (const auto& blk : cone.blocks) {
      Block ab;
      ab.n = blk.n;
      ab.f0 = blk.f0;
      ab.fmat = RowMat::Zero(aug.m, blk.n * blk.n);
      ab.fmat.topRows(cone.m) = blk.fmat;
      Eigen::MatrixXd neg_i = -Eigen::MatrixXd::Identity(blk.n, blk.n);
      ab.fmat.row(cone.m) =
          Eigen::Map<const Eigen::VectorXd>(neg_i.data(), blk.n * blk.n);
      aug.blocks.push_back(std::move(ab));
    }
    const double s_cap = std::max(1.0, 2.0 * std::abs(lambda_min0));
    Block cap;
    cap.n = 1;
    cap.f0 = Eigen::VectorXd::Constant(1, s_cap);
    cap.fmat = RowMat::Zero(aug.m, 1);
    cap.fmat(cone.m, 0) = -1.0;
    aug.blocks.push_back(std::move(cap));

    Eigen::VectorXd zs(aug.m);
    zs.head(cone.m) = z;
    zs(cone.m) = lambda_min0 - std::max(1.0, 0.1 * std::abs(lambda_min0));

    Eigen::VectorXd c_s = Eigen::VectorXd::Zero(aug.m);
    c_s(cone.m) = -1.0;  // minimize -s
    double t = 1.0;
    const double nu = aug.total_dim();
    for (int stage = 0; stage < opts.max_barrier_stages; ++stage) {
      NewtonOutcome oc = newton_minimize(aug, t * c_s, zs, opts,
                                         opts.max_newton - steps_used);
      steps_used += oc.steps;
      if (zs(cone.m) >= phase1_exit) break;
      if (oc.stalled || steps_used >= opts.max_newton) break;
      if (nu / t <= opts.feas_target * 0.1) break;
      t *= opts.mu;
    }
    margin = zs(cone.m);
    sol.stats.phase1_margin = margin;
    if (margin < opts.feas_target) {
      sol.status = LmiStatus::Infeasible;
      sol.message = "phase-1 margin " + std::to_string(margin) +
                    " below feasibility target";
      sol.stats.newton_steps = steps_used;
      return sol;
    }
    z = zs.head(cone.m);
  } else {
    sol.stats.phase1_margin = lambda_min0;
  }

  // Phase 2: follow the central path on the objective.
  bool gap_closed = true;
  if (p.objective_var() >= 0) {
    const double nu = cone.total_dim();
    double t = 1.0;
    gap_closed = false;
    for (int stage = 0; stage < opts.max_barrier_stages; ++stage) {
      sol.stats.barrier_stages = stage + 1;
      NewtonOutcome oc = newton_minimize(cone, (-t) * c_obj, z, opts,
                                         opts.max_newton - steps_used);
      steps_used += oc.steps;
      if (nu / t <= opts.gap_tol) {
        gap_closed = true;
        break;
      }
      if (oc.stalled && !oc.centered) break;
      if (steps_used >= opts.max_newton) break;
      t *= opts.mu;
    }
  } else {
    // Pure feasibility: one centering pass stabilizes the returned point.
    NewtonOutcome oc = newton_minimize(cone, Eigen::VectorXd::Zero(cone.m), z,
                                       opts, std::min(40, opts.max_newton));
    steps_used += oc.steps;
  }
  sol.stats.newton_steps = steps_used;

  // Map back to variable values.
  Eigen::VectorXd x = reduced ? (x0 + nullsp * z).eval() : (x0 + z).eval();
  sol.values.resize(p.num_vars());
  for (int vi = 0; vi < p.num_vars(); ++vi) {
    const auto& v = p.vars()[vi];
    Eigen::MatrixXd val = Eigen::MatrixXd::Zero(v.rows, v.cols);
    for_each_component(v, [&](int k, int pp, int qq, bool) {
      val(pp, qq) = x(v.offset + k);
      if (v.kind == LmiVarKind::Symmetric) val(qq, pp) = x(v.offset + k);
    });
    sol.values[vi] = std::move(val);
  }
  if (p.objective_var() >= 0) {
    sol.objective = sol.values[p.objective_var()](0, 0);
  }

  const LmiVerification rep = verify_lmi(p, sol.values);
  sol.min_eig = rep.min_eig;
  sol.max_eq_residual = rep.max_eq_residual;
  sol.stats.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();

  if (rep.min_eig < -opts.psd_tol || rep.max_eq_residual > opts.eq_tol) {
    sol.status = LmiStatus::NumericalFailure;
    sol.message = "verification failed: min_eig=" + std::to_string(rep.min_eig) +
                  " eq_residual=" + std::to_string(rep.max_eq_residual);
    return sol;
  }
  if (p.objective_var() >= 0 && !gap_closed) {
    sol.status = LmiStatus::Feasible;
    sol.message = "objective gap not fully closed";
    return sol;
  }
  sol.status =
      p.objective_var() >= 0 ? LmiStatus::Optimal : LmiStatus::Feasible;
  return sol;
}

void LmiProblem::dump(std::ostream& os) const {
  auto print_matrix = [&os](const Eigen::MatrixXd& m) {
    os << m.rows() << " " << m.cols() << "\n";
    for (int j = 0; j < m.cols(); ++j)
      for (int i = 0; i < m.rows(); ++i)
        if (m(i, j) != 0.0) os << i + 1 << " " << j + 1 << " " << m(i, j) << "\n";
    os << "end\n";
  };
  auto print_term = [&](const LmiTerm& t) {
    os << "term var " << vars_[t.var].name << (t.transpose ? " transposed" : "")
       << "\nleft ";
    print_matrix(t.left);
    if (vars_[t.var].kind != LmiVarKind::Scalar) {
      os << "right ";
      print_matrix(t.right);
    }
  };

  os << "%%LmiProblem\n";
  for (const auto& v : vars_) {
    os << "var " << v.name << " "
       << (v.kind == LmiVarKind::Symmetric
               ? "symmetric"
               : (v.kind == LmiVarKind::Scalar ? "scalar" : "rectangular"))
       << " " << v.rows << " " << v.cols << "\n";
  }
  if (objective_var_ >= 0)
    os << "maximize " << vars_[objective_var_].name << "\n";
  for (const auto& psd : psd_) {
    os << "psd " << psd.name << " size " << psd.size << "\n";
    for (const auto& cell : psd.cells) {
      os << "cell " << cell.row << " " << cell.col << "\n";
      if (cell.constant.size() > 0) {
        os << "constant ";
        print_matrix(cell.constant);
      }
      for (const auto& t : cell.terms) print_term(t);
    }
  }
  for (const auto& eq : eqs_) {
    os << "equality " << eq.name << " " << eq.rows << " " << eq.cols << "\n";
    os << "constant ";
    print_matrix(eq.constant);
    for (const auto& t : eq.terms) print_term(t);
  }
}

}  // namespace platoonlab
