#pragma once

#include <set>
#include <utility>
#include <vector>

#include "ginv/convex.hpp"
#include "ginv/dense.hpp"
#include "ginv/splitting.hpp"

namespace ginv {

// Shared data for the LP/QP encodings over a matrix A (m x n). The decision
// variable H is n x m; solver variables are H (row-major) followed by the
// epigraph variables Z with Z >= |H|.
class GinvFormulation {
 public:
  GinvFormulation(Matrix a, Matrix a_pinv);
  explicit GinvFormulation(const Matrix& a);

  const Matrix& a() const { return a_; }
  const Matrix& a_pinv() const { return a_pinv_; }
  // A A^+, the orthogonal projector onto range(A).
  const Matrix& range_proj() const { return range_proj_; }

  int n() const { return n_; }
  int m() const { return m_; }
  int h_index(int i, int j) const { return i * m_ + j; }
  int z_index(int i, int j) const { return n_ * m_ + i * m_ + j; }
  int num_vars() const { return 2 * n_ * m_; }
  // m*n rows for AHA = A plus m(m-1)/2 for the strict upper triangle of AH.
  int base_eq_count() const { return m_ * n_ + m_ * (m_ - 1) / 2; }

  Matrix h_from(const Vector& x) const;

 private:
  Matrix a_;
  Matrix a_pinv_;
  Matrix range_proj_;
  int n_;
  int m_;
};

// One linearized P2 equation: (H A A^+)_{ij} = H_{ij}, with its residual at
// the iterate that produced it.
struct P2Cut {
  int i = 0;
  int j = 0;
  double violation = 0.0;
};

// Canonical store of added cuts, keyed by (j, i). Re-adding is a no-op.
class P2CutSet {
 public:
  bool insert(int i, int j) { return keys_.emplace(j, i).second; }
  bool contains(int i, int j) const { return keys_.count({j, i}) > 0; }
  size_t size() const { return keys_.size(); }
  const std::set<std::pair<int, int>>& keys() const { return keys_; }

 private:
  std::set<std::pair<int, int>> keys_;
};

ConvexProblem build_p13(const GinvFormulation& f);
ConvexProblem build_p13(const Matrix& a);

// P13 plus every equation (H A A^+)_{ij} = H_{ij}.
ConvexProblem build_p123(const GinvFormulation& f);

// P13 plus the equations in cuts.
ConvexProblem build_p13_with_cuts(const GinvFormulation& f, const P2CutSet& cuts);

void add_p2_equation(ConvexProblem& p, const GinvFormulation& f, int i, int j);

// H A A^+ - H
Matrix p2_residual(const Matrix& h, const Matrix& a, const Matrix& a_pinv);

// Entries with |(HAA^+ - H)_{ij}| > p2_tol, ordered by (j, i) ascending.
std::vector<P2Cut> p2_violations(const Matrix& h, const Matrix& a, const Matrix& a_pinv,
                                 double p2_tol = 1e-6);

// <J,Z> + <Lambda, HAA^+ - H> + mu/2 ||HAA^+ - H||_F^2 over the P13 set.
ConvexProblem build_auglag_qp(const GinvFormulation& f, const Matrix& lambda, double mu);

// <J,Z> + mu ||HAA^+ - H||_F^2 over the P13 set.
ConvexProblem build_penalty_frob_qp(const GinvFormulation& f, double mu);

// <J,Z> + mu <J,S> with S >= |HAA^+ - H| over the P13 set. S follows Z in the
// variable order.
ConvexProblem build_penalty_l1_lp(const GinvFormulation& f, double mu);

SplittingProblem build_nuclear_subproblem(const GinvFormulation& f, double mu);

}  // namespace ginv
