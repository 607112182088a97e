#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace platoonlab {

enum class LmiVarKind { Symmetric, Rectangular, Scalar };

/// One affine term of a matrix expression. For matrix variables the
/// contribution is left * op(X) * right with op(X) = X^T when `transpose` is
/// set; for scalar variables it is x * left and `right` is ignored.
struct LmiTerm {
  int var = -1;
  Eigen::MatrixXd left;
  Eigen::MatrixXd right;
  bool transpose = false;
};

/// Declarative carrier for semidefinite feasibility/optimization problems:
/// decision variables (symmetric blocks, rectangular blocks, scalars), affine
/// PSD constraints assembled from block cells, affine equality constraints,
/// and an optional linear objective (maximize one scalar variable).
class LmiProblem {
 public:
  int add_symmetric(int n, std::string name);
  int add_rectangular(int rows, int cols, std::string name);
  int add_scalar(std::string name);

  /// New PSD constraint F(x) >= 0 of size n. Contributions are placed by cell
  /// origin; off-diagonal cells are mirrored automatically, so callers fill
  /// one triangle only. Diagonal-cell contributions must be symmetric.
  int add_psd(int n, std::string name);
  void psd_add_constant(int cons, int row, int col, const Eigen::MatrixXd& c);
  void psd_add_term(int cons, int row, int col, LmiTerm term);

  /// New rows x cols equality constraint sum(terms) + constant = 0.
  int add_equality(int rows, int cols, std::string name);
  void eq_add_constant(int eq, const Eigen::MatrixXd& c);
  void eq_add_term(int eq, LmiTerm term);

  /// Objective: maximize the given scalar variable (default: pure feasibility).
  void maximize(int scalar_var);

  /// Plain-text dump (matrix-market style triplets per matrix) for offline
  /// cross-checking with external tools.
  void dump(std::ostream& os) const;

  int num_vars() const { return static_cast<int>(vars_.size()); }
  int num_psd() const { return static_cast<int>(psd_.size()); }
  int num_equalities() const { return static_cast<int>(eqs_.size()); }

  struct Var {
    LmiVarKind kind;
    int rows = 0, cols = 0;
    std::string name;
    int offset = 0;  // first scalar component
    int dim = 0;     // number of scalar components
  };
  struct Cell {
    int row = 0, col = 0;
    Eigen::MatrixXd constant;  // zero-size when absent
    std::vector<LmiTerm> terms;
    int rows = 0, cols = 0;
  };
  struct Psd {
    int size = 0;
    std::string name;
    std::vector<Cell> cells;
  };
  struct Equality {
    int rows = 0, cols = 0;
    std::string name;
    Eigen::MatrixXd constant;
    std::vector<LmiTerm> terms;
  };

  const std::vector<Var>& vars() const { return vars_; }
  const std::vector<Psd>& psd_constraints() const { return psd_; }
  const std::vector<Equality>& equalities() const { return eqs_; }
  int objective_var() const { return objective_var_; }
  int num_components() const { return num_components_; }

 private:
  std::vector<Var> vars_;
  std::vector<Psd> psd_;
  std::vector<Equality> eqs_;
  int objective_var_ = -1;
  int num_components_ = 0;
};

enum class LmiStatus { Optimal, Feasible, Infeasible, NumericalFailure };

struct LmiOptions {
  double psd_tol = 1e-9;       // verification eigenvalue floor
  double eq_tol = 1e-8;        // verification equality residual
  double gap_tol = 1e-6;       // barrier termination gap on the objective
  double feas_target = 1e-9;   // phase-1 margin below which we call infeasible
  double newton_tol = 1e-9;    // squared Newton decrement / 2
  int max_newton = 800;
  int max_barrier_stages = 40;
  double mu = 20.0;            // barrier stage multiplier
  bool verbose = false;
};

struct LmiStats {
  int newton_steps = 0;
  int barrier_stages = 0;
  double phase1_margin = 0.0;
  double wall_seconds = 0.0;
};

struct LmiSolution {
  LmiStatus status = LmiStatus::NumericalFailure;
  std::vector<Eigen::MatrixXd> values;  // indexed by variable id
  double objective = 0.0;
  double min_eig = 0.0;          // verified over all PSD constraints
  double max_eq_residual = 0.0;  // verified over all equalities
  LmiStats stats;
  std::string message;
};

/// Interior-point (log-det barrier, two phase) solve. The returned assignment
/// is re-verified with verify_lmi; a point that fails the verification floors
/// is reported as NumericalFailure rather than Optimal.
LmiSolution solve_lmi(const LmiProblem& p, const LmiOptions& opts = {});

/// Independent verification: evaluates every constraint by direct dense
/// arithmetic on the assigned values (no shared state with the solver path).
struct LmiVerification {
  double min_eig = 0.0;
  double max_eq_residual = 0.0;
  std::vector<double> psd_min_eigs;
};
LmiVerification verify_lmi(const LmiProblem& p,
                           const std::vector<Eigen::MatrixXd>& values);

}  // namespace platoonlab
