#pragma once

// Strict feasibility of linear matrix inequalities in matrix variables.
//
// An LmiSystem holds variable blocks and symmetric constraints
//   F(x) = C + Σ coef·(place(L·V·R) [+ its transpose]) ≺ 0  (or ≻ 0).
// check_feasible() searches for a strictly feasible assignment with a
// log-barrier path-following method; verify_certificate() re-evaluates any
// assignment by eigen-decomposition only, independently of the solver.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace telestab::sdp {

enum class Structure { kSymmetric, kFull };
enum class Sense { kNegativeDefinite, kPositiveDefinite };

struct VarId {
  int index = -1;
};

struct VariableBlock {
  std::string name;
  int rows = 0;
  int cols = 0;
  Structure structure = Structure::kSymmetric;
  bool positive = false;  // adds an implicit V ≻ 0 constraint
};

struct Term {
  double coef = 1.0;
  Eigen::MatrixXd left;
  VarId var;
  Eigen::MatrixXd right;
  int row = 0;
  int col = 0;
  bool mirror = true;  // also add the transposed block
};

class Constraint {
 public:
  Constraint(std::string name, int size, Sense sense);

  // coef·L·V·R at (row, col) plus its transpose at (col, row).
  Constraint& add(double coef, const Eigen::MatrixXd& left, VarId var,
                  const Eigen::MatrixXd& right, int row, int col);
  // coef·L·V·Lᵀ on the diagonal block starting at `row`; V must be symmetric.
  Constraint& add_congruence(double coef, const Eigen::MatrixXd& left,
                             VarId var, int row);
  Constraint& set_constant(const Eigen::MatrixXd& constant);

  const std::string& name() const { return name_; }
  int size() const { return size_; }
  Sense sense() const { return sense_; }
  const Eigen::MatrixXd& constant() const { return constant_; }
  const std::vector<Term>& terms() const { return terms_; }

 private:
  std::string name_;
  int size_;
  Sense sense_;
  Eigen::MatrixXd constant_;
  std::vector<Term> terms_;
};

using Assignment = std::vector<Eigen::MatrixXd>;

class LmiSystem {
 public:
  VarId add_variable(std::string name, int rows, int cols, Structure structure,
                     bool positive);
  Constraint& add_constraint(std::string name, int size, Sense sense);

  const std::vector<VariableBlock>& variables() const { return variables_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const VariableBlock& variable(VarId id) const;
  VarId find(const std::string& name) const;
  // Number of free scalars after symmetry reduction.
  int scalar_count() const;
  bool homogeneous() const;

  // Throws StructuralError on inconsistent dimensions, unknown variables,
  // non-symmetric constants or asymmetric congruence terms.
  void validate() const;

  // Assembled constraint matrix at `values` (no solving).
  Eigen::MatrixXd evaluate(std::size_t constraint,
                           const Assignment& values) const;

  // Plain-text dump for external cross-checking.
  std::string dump() const;

 private:
  std::vector<VariableBlock> variables_;
  std::vector<Constraint> constraints_;
};

enum class Status { kFeasible, kInfeasible, kIndeterminate };

const char* to_string(Status status);

struct Margin {
  std::string name;
  Sense sense = Sense::kNegativeDefinite;
  // λ_max for ≺ 0 constraints, λ_min for ≻ 0 ones.
  double eigenvalue = 0.0;
  // Signed distance to violation: −λ_max or λ_min; positive when strict.
  double slack = 0.0;
};

struct SolverOptions {
  double tol = 1e-7;
  int max_newton_steps = 600;
  double rho_max = 1e14;
  // Variable-ball radius in scaled units; 0 picks 1 for homogeneous systems
  // and 1e4 otherwise.
  double ball_radius = 0.0;
  // Normalized margin below which a positive value is not trusted.
  double min_normalized_margin = 1e-11;
  // Dual bound below which the system is declared infeasible.
  double infeasibility_bound = 1e-9;
};

struct FeasibilityResult {
  Status status = Status::kIndeterminate;
  Assignment assignment;
  // Smallest slack over all constraints (including implicit positivity).
  double margin = 0.0;
  // Best normalized margin found and the dual upper bound on it.
  double normalized_margin = 0.0;
  double dual_bound = 0.0;
  int newton_steps = 0;
};

FeasibilityResult check_feasible(const LmiSystem& sys,
                                 const SolverOptions& options = {});
inline FeasibilityResult check_feasible(const LmiSystem& sys, double tol) {
  SolverOptions options;
  options.tol = tol;
  return check_feasible(sys, options);
}

// One margin per constraint, followed by one per positive variable block.
std::vector<Margin> verify_certificate(const LmiSystem& sys,
                                       const Assignment& values);

double min_slack(const std::vector<Margin>& margins);

}  // namespace telestab::sdp
