#pragma once

#include <Eigen/SparseCore>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ginv/dense.hpp"

namespace ginv {

// A sparse linear row: (variable index, coefficient) pairs and a right-hand
// side. Duplicate indices are summed.
struct LinearRow {
  std::vector<std::pair<int, double>> terms;
  double rhs = 0.0;
};

// min  c'x + 1/2 x'Qx
// s.t. E x = f,  G x <= h,  lower <= x <= upper.
class ConvexProblem {
 public:
  explicit ConvexProblem(int num_vars);

  int num_vars() const { return num_vars_; }

  Vector& objective_linear() { return c_; }
  const Vector& objective_linear() const { return c_; }

  // Adds v to Q(i, j) and, for i != j, to Q(j, i).
  void add_quadratic(int i, int j, double v);
  const std::vector<Eigen::Triplet<double>>& quadratic_terms() const {
    return q_terms_;
  }
  bool has_quadratic() const { return !q_terms_.empty(); }

  void add_equality(LinearRow row);
  void add_inequality(LinearRow row);  // row . x <= rhs
  void set_bounds(int var, double lower, double upper);

  const std::vector<LinearRow>& equalities() const { return eq_; }
  const std::vector<LinearRow>& inequalities() const { return ineq_; }
  const Vector& lower_bounds() const { return lower_; }
  const Vector& upper_bounds() const { return upper_; }

  double objective_value(const Vector& x) const;

  // Throws InvalidArgument when a row references a variable out of range,
  // a coefficient is non-finite, or Q is not symmetric positive semidefinite.
  void validate() const;

 private:
  int num_vars_;
  Vector c_;
  std::vector<Eigen::Triplet<double>> q_terms_;
  std::vector<LinearRow> eq_;
  std::vector<LinearRow> ineq_;
  Vector lower_;
  Vector upper_;
};

enum class SolveCode { Optimal, Infeasible, Unbounded, MaxIterations,
                       NumericalFailure };

std::string to_string(SolveCode code);

struct SolveStatus {
  SolveCode code = SolveCode::NumericalFailure;
  int iterations = 0;
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double duality_gap = 0.0;
  double primal_residual = 0.0;  // scaled
  double dual_residual = 0.0;    // scaled
};

struct Solution {
  Vector x;
  SolveStatus status;
  Vector duals_eq;    // one per equality row; zero on rows dropped by presolve
  Vector duals_ineq;  // one per inequality row, nonnegative
  int eq_rows_kept = 0;
};

struct IpmOptions {
  double tol = 1e-9;
  int max_iter = 200;
  // Relative pivot threshold for dropping dependent equality rows.
  double presolve_tol = 1e-10;
};

// Mehrotra predictor-corrector interior-point method on the dense reduced KKT
// system. Variables whose normal-matrix block is diagonal and which carry no
// equality coefficients (e.g. the epigraph variables of an l1 objective) are
// eliminated before factorization.
Solution solve(const ConvexProblem& problem, const IpmOptions& options = {});

}  // namespace ginv
