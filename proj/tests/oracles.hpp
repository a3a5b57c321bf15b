#pragma once

// Brute-force reference values shared by the unit and acceptance tests.

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ginv/analysis.hpp"
#include "ginv/dense.hpp"

namespace ginv::oracle {

// Columns span {P W Q : W n x m} as row-major vec(H).
inline Matrix span_of_sandwich(const Matrix& p, const Matrix& q) {
  const auto n = p.rows(), m = q.rows();
  Matrix gen(n * m, n * m);
  for (Eigen::Index k = 0; k < n * m; ++k) {
    Matrix w = Matrix::Zero(n, m);
    w(k / m, k % m) = 1.0;
    const Matrix img = p * w * q;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < m; ++j) gen(i * m + j, k) = img(i, j);
  }
  const Eigen::JacobiSVD<Matrix> s(gen, Eigen::ComputeThinU);
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < s.singularValues().size(); ++k)
    if (s.singularValues()(k) > 1e-9) ++rank;
  return s.matrixU().leftCols(rank);
}

// min ||x0 + B y||_1 by enumeration: some minimizer zeroes d = cols(B)
// coordinates whose rows of B are independent.
inline double min_l1_affine(const Vector& x0, const Matrix& b) {
  const int len = static_cast<int>(x0.size());
  const int d = static_cast<int>(b.cols());
  if (d == 0) return x0.cwiseAbs().sum();
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> idx(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i) idx[static_cast<size_t>(i)] = i;
  while (true) {
    Matrix bs(d, d);
    Vector rhs(d);
    for (int r = 0; r < d; ++r) {
      bs.row(r) = b.row(idx[static_cast<size_t>(r)]);
      rhs(r) = -x0(idx[static_cast<size_t>(r)]);
    }
    const Eigen::ColPivHouseholderQR<Matrix> qr(bs);
    if (qr.rank() == d) best = std::min(best, (x0 + b * qr.solve(rhs)).cwiseAbs().sum());
    int pos = d - 1;
    while (pos >= 0 && idx[static_cast<size_t>(pos)] == len - d + pos) --pos;
    if (pos < 0) break;
    ++idx[static_cast<size_t>(pos)];
    for (int r = pos + 1; r < d; ++r) idx[static_cast<size_t>(r)] = idx[static_cast<size_t>(r - 1)] + 1;
  }
  return best;
}

inline Vector row_major(const Matrix& h) {
  Vector v(h.size());
  for (Eigen::Index i = 0; i < h.rows(); ++i)
    for (Eigen::Index j = 0; j < h.cols(); ++j) v(i * h.cols() + j) = h(i, j);
  return v;
}

// min ||H||_1 over AH = AA^+, parametrized as H = A^+ + (I - A^+A) W.
inline double z_p13(const Matrix& a, const Matrix& a_pinv) {
  const auto n = a.cols(), m = a.rows();
  const Matrix p = Matrix::Identity(n, n) - a_pinv * a;
  return min_l1_affine(row_major(a_pinv), span_of_sandwich(p, Matrix::Identity(m, m)));
}

// As z_p13 with H(I - AA^+) = 0 added, i.e. H = A^+ + (I - A^+A) W AA^+.
inline double z_p123(const Matrix& a, const Matrix& a_pinv) {
  const auto n = a.cols();
  const Matrix p = Matrix::Identity(n, n) - a_pinv * a;
  return min_l1_affine(row_major(a_pinv), span_of_sandwich(p, a * a_pinv));
}

// O(k^2) Pareto reference: drop p when some q is no worse in rank and norm
// and better in one; of exact duplicates keep the first.
inline std::vector<ParetoPoint> pareto_front(const std::vector<ParetoPoint>& pts,
                                             NormKind kind = NormKind::L1) {
  std::vector<ParetoPoint> out;
  for (size_t a = 0; a < pts.size(); ++a) {
    bool keep = true;
    for (size_t b = 0; b < pts.size() && keep; ++b) {
      if (a == b) continue;
      const double na = norm_of(pts[a], kind), nb = norm_of(pts[b], kind);
      const bool weak = pts[b].rank <= pts[a].rank && nb <= na;
      const bool strict = pts[b].rank < pts[a].rank || nb < na;
      if (weak && (strict || b < a)) keep = false;
    }
    if (keep) out.push_back(pts[a]);
  }
  return out;
}

// Same multiset of (rank, norm) pairs.
inline bool same_front(std::vector<ParetoPoint> x, std::vector<ParetoPoint> y, NormKind kind) {
  auto key = [&](const ParetoPoint& p) { return std::pair(p.rank, norm_of(p, kind)); };
  auto cmp = [&](const ParetoPoint& p, const ParetoPoint& q) { return key(p) < key(q); };
  if (x.size() != y.size()) return false;
  std::sort(x.begin(), x.end(), cmp);
  std::sort(y.begin(), y.end(), cmp);
  for (size_t k = 0; k < x.size(); ++k)
    if (key(x[k]) != key(y[k])) return false;
  return true;
}

}  // namespace ginv::oracle
