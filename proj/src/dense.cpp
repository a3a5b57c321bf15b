#include "ginv/dense.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "ginv/errors.hpp"

namespace ginv {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Orthogonalizes the columns of w in place (w <- w * V) and accumulates the
// rotations into v when it is non-null. Requires w.rows() >= w.cols().
void jacobi_orthogonalize(Matrix& w, Matrix* v, int max_sweeps) {
  const Eigen::Index q = w.cols();
  const double tol = kEps * static_cast<double>(w.rows());
  Vector norms2 = w.colwise().squaredNorm().transpose();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (Eigen::Index i = 0; i + 1 < q; ++i) {
      for (Eigen::Index j = i + 1; j < q; ++j) {
        const double alpha = norms2(i);
        const double beta = norms2(j);
        if (alpha == 0.0 || beta == 0.0) continue;
        const double gamma = w.col(i).dot(w.col(j));
        if (std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index k = 0; k < w.rows(); ++k) {
          const double wi = w(k, i);
          const double wj = w(k, j);
          w(k, i) = c * wi - s * wj;
          w(k, j) = s * wi + c * wj;
        }
        if (v != nullptr) {
          for (Eigen::Index k = 0; k < v->rows(); ++k) {
            const double vi = (*v)(k, i);
            const double vj = (*v)(k, j);
            (*v)(k, i) = c * vi - s * vj;
            (*v)(k, j) = s * vi + c * vj;
          }
        }
        norms2(i) = w.col(i).squaredNorm();
        norms2(j) = w.col(j).squaredNorm();
      }
    }
    if (!rotated) return;
  }
  throw NonConvergence("jacobi svd: no convergence after " +
                       std::to_string(max_sweeps) + " sweeps");
}

// SVD of a tall (rows >= cols) matrix.
SvdResult svd_tall(const Matrix& a, const SvdOptions& options) {
  const Eigen::Index p = a.rows();
  const Eigen::Index q = a.cols();
  Matrix w = a;
  Matrix v = Matrix::Identity(q, q);
  jacobi_orthogonalize(w, &v, options.max_sweeps);

  Vector norms = w.colwise().norm().transpose();
  std::vector<Eigen::Index> order(static_cast<size_t>(q));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) {
                     return norms(x) > norms(y);
                   });

  SvdResult out;
  out.sigma.resize(q);
  out.v.resize(q, q);
  Matrix basis(p, q);
  for (Eigen::Index k = 0; k < q; ++k) {
    const Eigen::Index src = order[static_cast<size_t>(k)];
    out.sigma(k) = norms(src);
    out.v.col(k) = v.col(src);
    basis.col(k) = w.col(src);
  }

  const double sigma_max = q > 0 ? out.sigma(0) : 0.0;
  const double cutoff = static_cast<double>(std::max(p, q)) * kEps * sigma_max;
  Eigen::Index kept = 0;
  while (kept < q && out.sigma(kept) > cutoff && out.sigma(kept) > 0.0) {
    ++kept;
  }

  out.u.resize(p, p);
  if (kept == 0) {
    out.u.setIdentity();
    return out;
  }
  Matrix left(p, kept);
  for (Eigen::Index k = 0; k < kept; ++k) {
    left.col(k) = basis.col(k) / out.sigma(k);
  }
  if (kept < p) {
    Eigen::HouseholderQR<Matrix> qr(left);
    const Matrix q_full = qr.householderQ() * Matrix::Identity(p, p);
    out.u.rightCols(p - kept) = q_full.rightCols(p - kept);
  }
  out.u.leftCols(kept) = left;
  return out;
}

}  // namespace

SvdResult svd(const Matrix& a, const SvdOptions& options) {
  if (!a.allFinite()) throw InvalidArgument("svd: matrix has non-finite entries");
  if (a.rows() >= a.cols()) return svd_tall(a, options);
  SvdResult t = svd_tall(a.transpose(), options);
  return SvdResult{std::move(t.v), std::move(t.sigma), std::move(t.u)};
}

Vector singular_values(const Matrix& a) {
  if (!a.allFinite()) {
    throw InvalidArgument("singular_values: matrix has non-finite entries");
  }
  Matrix w = a.rows() >= a.cols() ? a : Matrix(a.transpose());
  jacobi_orthogonalize(w, nullptr, SvdOptions{}.max_sweeps);
  Vector s = w.colwise().norm().transpose();
  std::sort(s.data(), s.data() + s.size(), std::greater<>());
  return s;
}

Matrix pinv(const Matrix& a, double sigma_tol) {
  const SvdResult f = svd(a);
  Matrix out = Matrix::Zero(a.cols(), a.rows());
  if (f.sigma.size() == 0 || f.sigma(0) == 0.0) return out;
  const double cutoff = sigma_tol * f.sigma(0);
  for (Eigen::Index k = 0; k < f.sigma.size(); ++k) {
    if (f.sigma(k) <= cutoff) break;
    out.noalias() += (f.v.col(k) / f.sigma(k)) * f.u.col(k).transpose();
  }
  return out;
}

MatrixNorms matrix_norms(const Matrix& h, double zero_tol) {
  MatrixNorms n;
  n.l1 = h.cwiseAbs().sum();
  n.l0 = static_cast<long>((h.cwiseAbs().array() > zero_tol).count());
  n.frob = h.norm();
  n.nuclear = h.size() == 0 ? 0.0 : singular_values(h).sum();
  return n;
}

int numerical_rank(const Matrix& h, double rank_tol, bool relative) {
  if (h.size() == 0) return 0;
  const Vector s = singular_values(h);
  const double cutoff = relative ? rank_tol * s(0) : rank_tol;
  return static_cast<int>((s.array() > cutoff).count());
}

PenroseResiduals penrose_residuals(const Matrix& a, const Matrix& h) {
  const Matrix ah = a * h;
  const Matrix ha = h * a;
  PenroseResiduals r;
  r.p1 = max_abs(ah * a - a);
  r.p2 = max_abs(h * ah - h);
  r.p3 = max_abs(ah - ah.transpose());
  r.p4 = max_abs(ha - ha.transpose());
  return r;
}

Matrix orthogonal_factor(const Matrix& a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), a.rows());
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  const Eigen::Index k = std::min(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < k; ++i) {
    if (r(i, i) < 0.0) q.col(i) = -q.col(i);
  }
  return q;
}

}  // namespace ginv
