#pragma once

#include <Eigen/Dense>

namespace ginv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct SvdResult {
  Matrix u;      // m x m, orthogonal
  Vector sigma;  // min(m, n) values, nonincreasing
  Matrix v;      // n x n, orthogonal
};

struct SvdOptions {
  int max_sweeps = 60;
};

// Full SVD by one-sided (Hestenes) Jacobi rotations. Throws NonConvergence
// when the off-diagonal mass does not vanish within max_sweeps.
SvdResult svd(const Matrix& a, const SvdOptions& options = {});

// Singular values only; same algorithm, skips forming U.
Vector singular_values(const Matrix& a);

// Moore-Penrose pseudoinverse. Singular values <= sigma_tol * sigma_1 are
// treated as zero. The zero matrix maps to the zero matrix of transposed shape.
Matrix pinv(const Matrix& a, double sigma_tol = 1e-5);

struct MatrixNorms {
  double l1 = 0.0;
  long l0 = 0;
  double frob = 0.0;
  double nuclear = 0.0;
};

MatrixNorms matrix_norms(const Matrix& h, double zero_tol = 1e-6);

// Number of singular values strictly above rank_tol. With relative = true the
// threshold becomes rank_tol * sigma_1.
int numerical_rank(const Matrix& h, double rank_tol = 1e-5,
                   bool relative = false);

// Max-abs residuals of the four Penrose conditions for a candidate h of a.
struct PenroseResiduals {
  double p1 = 0.0;  // |AHA - A|
  double p2 = 0.0;  // |HAH - H|
  double p3 = 0.0;  // |AH - (AH)^T|
  double p4 = 0.0;  // |HA - (HA)^T|
};

PenroseResiduals penrose_residuals(const Matrix& a, const Matrix& h);

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// Orthogonal factor of a QR factorization with R's diagonal made nonnegative.
Matrix orthogonal_factor(const Matrix& a);

}  // namespace ginv
