#include "ginv/splitting.hpp"

#include <cmath>

#include "ginv/errors.hpp"

namespace ginv {

AffineProjector::AffineProjector(const Matrix& a, const Matrix& a_pinv)
    : a_pinv_(a_pinv) {
  if (a_pinv.rows() != a.cols() || a_pinv.cols() != a.rows()) {
    throw InvalidArgument("AffineProjector: pseudoinverse has wrong shape");
  }
  null_proj_ = Matrix::Identity(a.cols(), a.cols()) - a_pinv * a;
}

Matrix AffineProjector::project(const Matrix& x) const {
  return null_proj_ * x + a_pinv_;
}

Matrix project_affine(const Matrix& x0, const Matrix& a, const AffineProjector& cache) {
  if (x0.rows() != a.cols() || x0.cols() != a.rows() || cache.rows() != a.cols() ||
      cache.cols() != a.rows()) {
    throw InvalidArgument("project_affine: shape mismatch");
  }
  return cache.project(x0);
}

Matrix prox_l1(const Matrix& x, double t) {
  if (!(t >= 0.0)) throw InvalidArgument("prox_l1: threshold must be nonnegative");
  return x.unaryExpr([t](double v) {
    return std::copysign(std::max(std::abs(v) - t, 0.0), v);
  });
}

Matrix prox_nuclear(const Matrix& x, double t) {
  if (!(t >= 0.0)) throw InvalidArgument("prox_nuclear: threshold must be nonnegative");
  if (t == 0.0) return x;
  const SvdResult f = svd(x);
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (Eigen::Index k = 0; k < f.sigma.size(); ++k) {
    const double s = f.sigma(k) - t;
    if (s <= 0.0) break;
    out.noalias() += s * f.u.col(k) * f.v.col(k).transpose();
  }
  return out;
}

constexpr int kMaxRhoChanges = 8;

SplittingResult solve_splitting(const SplittingProblem& problem,
                                const SplittingOptions& options,
                                const std::optional<Matrix>& warm_start) {
  if (problem.mu < 0.0) throw InvalidArgument("solve_splitting: mu must be nonnegative");
  if (!(options.rho > 0.0)) throw InvalidArgument("solve_splitting: rho must be positive");
  const AffineProjector proj(problem.a, problem.a_pinv);
  const Eigen::Index n = problem.a.cols();
  const Eigen::Index m = problem.a.rows();

  Matrix z = warm_start ? proj.project(*warm_start) : problem.a_pinv;
  if (z.rows() != n || z.cols() != m) throw InvalidArgument("solve_splitting: bad warm start");
  Matrix u1 = Matrix::Zero(n, m), u2 = Matrix::Zero(n, m), u3 = Matrix::Zero(n, m);
  Matrix x1 = z, x2 = z, x3 = z;

  double rho = options.rho;
  int rho_changes = 0;
  SplittingResult out;
  for (int it = 1; it <= options.max_iter; ++it) {
    const double step = 1.0 / rho;
    x1 = prox_l1(z - u1, step);
    x2 = prox_nuclear(z - u2, problem.mu * step);
    x3 = proj.project(z - u3);
    const Matrix z_old = z;
    const double a = options.relaxation;
    const Matrix r1 = a * x1 + (1.0 - a) * z_old;
    const Matrix r2 = a * x2 + (1.0 - a) * z_old;
    const Matrix r3 = a * x3 + (1.0 - a) * z_old;
    z = (r1 + u1 + r2 + u2 + r3 + u3) / 3.0;
    u1 += r1 - z;
    u2 += r2 - z;
    u3 += r3 - z;

    out.iterations = it;
    out.primal_residual = std::sqrt((x1 - z).squaredNorm() + (x2 - z).squaredNorm() +
                                    (x3 - z).squaredNorm());
    out.dual_residual = rho * std::sqrt(3.0) * (z - z_old).norm();
    if (out.primal_residual <= options.tol && out.dual_residual <= options.tol) {
      out.converged = true;
      break;
    }
    // Residual balancing; the scaled duals u = y / rho follow rho. Frozen
    // after a few changes so the tail runs with fixed rho.
    if (options.adaptive_rho && rho_changes < kMaxRhoChanges && it % 25 == 0) {
      double scale = 1.0;
      if (out.primal_residual > 10.0 * out.dual_residual) scale = 2.0;
      if (out.dual_residual > 10.0 * out.primal_residual) scale = 0.5;
      if (scale != 1.0) {
        rho *= scale;
        u1 /= scale;
        u2 /= scale;
        u3 /= scale;
        ++rho_changes;
      }
    }
  }
  out.final_rho = rho;
  out.stalled = !out.converged && std::max(out.primal_residual, out.dual_residual) >
                                      std::sqrt(options.tol);
  out.h = x3;
  out.objective = out.h.cwiseAbs().sum() +
                  (problem.mu > 0.0 ? problem.mu * singular_values(out.h).sum() : 0.0);
  return out;
}

}  // namespace ginv
