#include "ginv/formulations.hpp"

#include <gtest/gtest.h>

#include <random>

#include "ginv/errors.hpp"
#include "ginv/instances.hpp"
#include "oracles.hpp"

namespace ginv {
namespace {

double solve_obj(const ConvexProblem& p, Solution* out = nullptr) {
  Solution s = solve(p);
  EXPECT_EQ(s.status.code, SolveCode::Optimal) << to_string(s.status.code);
  if (out) *out = s;
  return s.status.primal_obj;
}

Matrix diag20() { return Eigen::Vector2d(2, 0).asDiagonal().toDenseMatrix(); }

TEST(Formulation, Counts) {
  const Instance inst = generate_instance(4, 3, 2, 2.0, 1);
  const GinvFormulation f(inst.a, inst.a_pinv);
  EXPECT_EQ(f.n(), 3);
  EXPECT_EQ(f.m(), 4);
  const ConvexProblem p13 = build_p13(f);
  EXPECT_EQ(p13.num_vars(), 24);
  EXPECT_EQ(static_cast<int>(p13.equalities().size()), 4 * 3 + 6);
  EXPECT_EQ(static_cast<int>(p13.inequalities().size()), 24);
  const ConvexProblem p123 = build_p123(f);
  EXPECT_EQ(static_cast<int>(p123.equalities().size()), 18 + 12);
  EXPECT_EQ(build_penalty_l1_lp(f, 1.0).num_vars(), 36);
}

TEST(Formulation, HFromIsRowMajor) {
  const GinvFormulation f(Matrix::Ones(2, 3));
  Vector x = Vector::Zero(f.num_vars());
  x(f.h_index(2, 1)) = 5.0;
  const Matrix h = f.h_from(x);
  EXPECT_EQ(h.rows(), 3);
  EXPECT_EQ(h.cols(), 2);
  EXPECT_EQ(h(2, 1), 5.0);
  EXPECT_EQ(h.cwiseAbs().sum(), 5.0);
}

TEST(Formulation, DiagonalExample) {
  const GinvFormulation f(diag20());
  Solution s;
  EXPECT_NEAR(solve_obj(build_p13(f), &s), 0.5, 1e-7);
  Matrix expected = Matrix::Zero(2, 2);
  expected(0, 0) = 0.5;
  EXPECT_LE(max_abs(f.h_from(s.x) - expected), 1e-6);
  EXPECT_NEAR(solve_obj(build_p123(f)), 0.5, 1e-7);
}

TEST(Formulation, OnesExample) {
  const GinvFormulation f(Matrix::Ones(2, 2));
  EXPECT_NEAR(solve_obj(build_p13(f)), 1.0, 1e-7);
  EXPECT_NEAR(solve_obj(build_p123(f)), 1.0, 1e-7);
  EXPECT_NEAR(oracle::z_p13(f.a(), f.a_pinv()), 1.0, 1e-12);
}

TEST(Formulation, InvertibleGivesInverseNorm) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  Matrix a(3, 3);
  for (int i = 0; i < 9; ++i) a.data()[i] = normal(rng);
  const GinvFormulation f(a);
  const double target = a.inverse().cwiseAbs().sum();
  EXPECT_NEAR(solve_obj(build_p13(f)), target, 1e-6 * target);
  EXPECT_NEAR(solve_obj(build_p123(f)), target, 1e-6 * target);
}

TEST(Formulation, MatchesEnumerationOracle) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const int m = seed % 2 ? 3 : 2, n = seed % 3 ? 3 : 2;
    const Instance inst = generate_instance(m, n, 1 + static_cast<int>(seed % 2), 2.0, seed);
    const GinvFormulation f(inst.a, inst.a_pinv);
    const double z13 = oracle::z_p13(inst.a, inst.a_pinv);
    const double z123 = oracle::z_p123(inst.a, inst.a_pinv);
    EXPECT_NEAR(solve_obj(build_p13(f)), z13, 1e-6 * (1 + z13)) << "seed " << seed;
    EXPECT_NEAR(solve_obj(build_p123(f)), z123, 1e-6 * (1 + z123)) << "seed " << seed;
  }
}

TEST(Formulation, RelaxationChain) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Instance inst = generate_instance(5, 5, 2, 2.0, seed);
    const GinvFormulation f(inst.a, inst.a_pinv);
    const double z13 = solve_obj(build_p13(f));
    const double z123 = solve_obj(build_p123(f));
    const double zpinv = inst.a_pinv.cwiseAbs().sum();
    EXPECT_LE(z13, z123 + 1e-7);
    EXPECT_LE(z123, zpinv + 1e-7);
  }
}

TEST(Formulation, P13OptimumSatisfiesAHEqualsAAPinv) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const Instance inst = generate_instance(6, 5, 3, 2.0, seed);
    const GinvFormulation f(inst.a, inst.a_pinv);
    Solution s;
    solve_obj(build_p13(f), &s);
    const Matrix h = f.h_from(s.x);
    EXPECT_LE(max_abs(inst.a * h - f.range_proj()), 1e-6);
    const PenroseResiduals r = penrose_residuals(inst.a, h);
    EXPECT_LE(r.p1, 1e-6);
    EXPECT_LE(r.p3, 1e-6);
  }
}

TEST(Formulation, NestedCutsAreMonotone) {
  const Instance inst = generate_instance(5, 5, 2, 2.0, 4);
  const GinvFormulation f(inst.a, inst.a_pinv);
  const double z13 = solve_obj(build_p13(f));
  const double z123 = solve_obj(build_p123(f));
  std::vector<std::pair<int, int>> all;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) all.emplace_back(i, j);
  std::mt19937_64 rng(8);
  std::shuffle(all.begin(), all.end(), rng);
  P2CutSet cuts;
  double prev = z13;
  for (size_t k = 0; k < all.size(); ++k) {
    cuts.insert(all[k].first, all[k].second);
    if (k % 5 != 4) continue;
    const double z = solve_obj(build_p13_with_cuts(f, cuts));
    EXPECT_GE(z, prev - 1e-7);
    EXPECT_LE(z, z123 + 1e-7);
    prev = z;
  }
  EXPECT_NEAR(prev, z123, 1e-7 * (1 + z123));
}

TEST(Formulation, CutSetIgnoresDuplicates) {
  P2CutSet cuts;
  EXPECT_TRUE(cuts.insert(1, 2));
  EXPECT_FALSE(cuts.insert(1, 2));
  EXPECT_TRUE(cuts.contains(1, 2));
  EXPECT_FALSE(cuts.contains(2, 1));
  EXPECT_EQ(cuts.size(), 1u);
}

TEST(Formulation, AddP2EquationRejectsOutOfRange) {
  const GinvFormulation f(Matrix::Ones(2, 2));
  ConvexProblem p = build_p13(f);
  EXPECT_THROW(add_p2_equation(p, f, 2, 0), InvalidArgument);
}

TEST(P2, ResidualAndViolations) {
  const Matrix a = diag20();
  const Matrix ap = pinv(a);
  Matrix h = Matrix::Zero(2, 2);
  h(0, 0) = 0.5;
  h(1, 1) = 3.0;
  h(0, 1) = -1.0;
  // HAA^+ zeroes the second column
  const Matrix res = p2_residual(h, a, ap);
  EXPECT_DOUBLE_EQ(res(1, 1), -3.0);
  EXPECT_DOUBLE_EQ(res(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(res(0, 0), 0.0);
  const std::vector<P2Cut> v = p2_violations(h, a, ap);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].i, 0);
  EXPECT_EQ(v[0].j, 1);
  EXPECT_EQ(v[1].i, 1);
  EXPECT_EQ(v[1].j, 1);
  EXPECT_DOUBLE_EQ(v[1].violation, -3.0);  // signed residual
}

TEST(P2, ViolationOrderIsColumnMajor) {
  const Instance inst = generate_instance(4, 4, 2, 2.0, 2);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  Matrix h(4, 4);
  for (int i = 0; i < 16; ++i) h.data()[i] = normal(rng);
  const std::vector<P2Cut> v = p2_violations(h, inst.a, inst.a_pinv);
  const Matrix res = p2_residual(h, inst.a, inst.a_pinv);
  int satisfied = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) satisfied += std::abs(res(i, j)) <= 1e-6;
  EXPECT_EQ(static_cast<int>(v.size()) + satisfied, 16);
  for (size_t k = 1; k < v.size(); ++k) {
    EXPECT_LT(std::make_pair(v[k - 1].j, v[k - 1].i), std::make_pair(v[k].j, v[k].i));
  }
}

TEST(P2, PseudoinverseHasNoViolations) {
  const Instance inst = generate_instance(6, 4, 3, 2.0, 3);
  EXPECT_TRUE(p2_violations(inst.a_pinv, inst.a, inst.a_pinv).empty());
}

TEST(Penalty, AugLagWithZeroWeightsIsP13) {
  const Instance inst = generate_instance(5, 4, 2, 2.0, 5);
  const GinvFormulation f(inst.a, inst.a_pinv);
  const Matrix zero = Matrix::Zero(4, 5);
  EXPECT_NEAR(solve_obj(build_auglag_qp(f, zero, 0.0)), solve_obj(build_p13(f)), 1e-7);
}

TEST(Penalty, VanishesAtPseudoinverse) {
  const Instance inst = generate_instance(5, 4, 2, 2.0, 6);
  const GinvFormulation f(inst.a, inst.a_pinv);
  Vector x(f.num_vars());
  for (int i = 0; i < f.n(); ++i)
    for (int j = 0; j < f.m(); ++j) {
      x(f.h_index(i, j)) = inst.a_pinv(i, j);
      x(f.z_index(i, j)) = std::abs(inst.a_pinv(i, j));
    }
  const double l1 = inst.a_pinv.cwiseAbs().sum();
  Matrix lambda = Matrix::Constant(4, 5, 0.7);
  EXPECT_NEAR(build_auglag_qp(f, lambda, 3.0).objective_value(x), l1, 1e-10);
  EXPECT_NEAR(build_penalty_frob_qp(f, 3.0).objective_value(x), l1, 1e-10);
  Vector xs = Vector::Zero(3 * f.n() * f.m());
  xs.head(f.num_vars()) = x;
  EXPECT_NEAR(build_penalty_l1_lp(f, 3.0).objective_value(xs), l1, 1e-10);
}

TEST(Penalty, FrobeniusUsesSquaredNorm) {
  const GinvFormulation f(diag20());
  Vector x = Vector::Zero(f.num_vars());
  x(f.h_index(1, 1)) = 2.0;  // residual -2 in (1,1)
  x(f.z_index(1, 1)) = 2.0;
  EXPECT_NEAR(build_penalty_frob_qp(f, 0.5).objective_value(x), 2.0 + 0.5 * 4.0, 1e-12);
  EXPECT_NEAR(build_auglag_qp(f, Matrix::Zero(2, 2), 0.5).objective_value(x), 2.0 + 0.25 * 4.0,
              1e-12);
}

TEST(Penalty, L1ZeroWeightIsP13) {
  const Instance inst = generate_instance(5, 5, 2, 2.0, 7);
  const GinvFormulation f(inst.a, inst.a_pinv);
  EXPECT_NEAR(solve_obj(build_penalty_l1_lp(f, 0.0)), solve_obj(build_p13(f)), 1e-7);
}

TEST(Penalty, L1LargeWeightIsExact) {
  const Instance inst = generate_instance(5, 5, 2, 2.0, 7);
  const GinvFormulation f(inst.a, inst.a_pinv);
  Solution s;
  const double z = solve_obj(build_penalty_l1_lp(f, 1e6), &s);
  const Matrix h = f.h_from(s.x);
  const double z123 = oracle::z_p123(inst.a, inst.a_pinv);
  EXPECT_LE(max_abs(p2_residual(h, inst.a, inst.a_pinv)), 1e-6);
  EXPECT_NEAR(h.cwiseAbs().sum(), z123, 1e-6 * (1 + z123));
  EXPECT_NEAR(z, z123, 1e-4 * (1 + z123));
}

TEST(Penalty, NuclearSubproblemCarriesWeight) {
  const GinvFormulation f(Matrix::Ones(2, 2));
  const SplittingProblem sp = build_nuclear_subproblem(f, 0.3);
  EXPECT_EQ(sp.mu, 0.3);
  EXPECT_LE(max_abs(sp.a_pinv - f.a_pinv()), 0.0);
}

TEST(Penalty, RejectsBadArguments) {
  const GinvFormulation f(Matrix::Ones(2, 2));
  EXPECT_THROW(build_penalty_frob_qp(f, -1.0), InvalidArgument);
  EXPECT_THROW(build_penalty_l1_lp(f, -1.0), InvalidArgument);
  EXPECT_THROW(build_auglag_qp(f, Matrix::Zero(3, 2), 1.0), InvalidArgument);
}

}  // namespace
}  // namespace ginv
