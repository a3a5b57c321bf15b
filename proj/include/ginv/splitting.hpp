#pragma once

#include <optional>

#include "ginv/dense.hpp"

namespace ginv {

// Euclidean projection onto {H : AHA = A, (AH)' = AH}. Under those two
// conditions AH = AA^+, so the set is {H : AH = AA^+} and the projection has
// the closed form (I - A^+A) X + A^+.
class AffineProjector {
 public:
  AffineProjector(const Matrix& a, const Matrix& a_pinv);

  Matrix project(const Matrix& x) const;

  Eigen::Index rows() const { return a_pinv_.rows(); }
  Eigen::Index cols() const { return a_pinv_.cols(); }

 private:
  Matrix a_pinv_;
  Matrix null_proj_;  // I - A^+ A
};

Matrix project_affine(const Matrix& x0, const Matrix& a, const AffineProjector& cache);

// Elementwise soft threshold.
Matrix prox_l1(const Matrix& x, double t);

// Singular-value soft threshold.
Matrix prox_nuclear(const Matrix& x, double t);

// min ||H||_1 + mu ||H||_*  s.t.  AHA = A, (AH)' = AH
struct SplittingProblem {
  Matrix a;
  Matrix a_pinv;
  double mu = 0.0;
};

struct SplittingOptions {
  double rho = 1.0;
  double tol = 1e-7;
  int max_iter = 5000;
  double relaxation = 1.5;   // over-relaxation factor in (0, 2)
  bool adaptive_rho = true;  // rho starts at rho and is rebalanced every 25 rounds, at most 8 times
};

struct SplittingResult {
  Matrix h;  // the affine-projected copy; satisfies P1 and P3 exactly
  int iterations = 0;
  bool converged = false;
  // Iteration cap reached with residuals still above sqrt(tol).
  bool stalled = false;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double objective = 0.0;
  double final_rho = 0.0;
};

// Three-block consensus ADMM: copies for the l1 prox, the nuclear prox and
// the affine projection, averaged into a consensus variable each round.
SplittingResult solve_splitting(const SplittingProblem& problem,
                                const SplittingOptions& options = {},
                                const std::optional<Matrix>& warm_start = std::nullopt);

}  // namespace ginv
