#include "ginv/formulations.hpp"

#include <algorithm>
#include <cmath>

#include "ginv/errors.hpp"

namespace ginv {

GinvFormulation::GinvFormulation(Matrix a, Matrix a_pinv)
    : a_(std::move(a)),
      a_pinv_(std::move(a_pinv)),
      n_(static_cast<int>(a_.cols())),
      m_(static_cast<int>(a_.rows())) {
  if (a_.size() == 0) throw InvalidArgument("GinvFormulation: empty matrix");
  if (a_pinv_.rows() != a_.cols() || a_pinv_.cols() != a_.rows()) {
    throw InvalidArgument("GinvFormulation: pseudoinverse has wrong shape");
  }
  if (max_abs(a_) == 0.0) throw InvalidArgument("GinvFormulation: A must be nonzero");
  range_proj_ = a_ * a_pinv_;
}

GinvFormulation::GinvFormulation(const Matrix& a) : GinvFormulation(a, pinv(a)) {}

Matrix GinvFormulation::h_from(const Vector& x) const {
  Matrix h(n_, m_);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < m_; ++j) h(i, j) = x(h_index(i, j));
  }
  return h;
}

namespace {

constexpr double kDropTol = 0.0;

ConvexProblem base_problem(const GinvFormulation& f, int num_vars) {
  const int n = f.n();
  const int m = f.m();
  const Matrix& a = f.a();
  ConvexProblem p(num_vars);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      p.objective_linear()(f.z_index(i, j)) = 1.0;
      // Z - H >= 0   and   Z + H >= 0
      p.add_inequality(LinearRow{{{f.h_index(i, j), 1.0}, {f.z_index(i, j), -1.0}}, 0.0});
      p.add_inequality(LinearRow{{{f.h_index(i, j), -1.0}, {f.z_index(i, j), -1.0}}, 0.0});
    }
  }
  // (AHA)_{kl} = sum_{i,j} A_{ki} H_{ij} A_{jl} = A_{kl}
  for (int k = 0; k < m; ++k) {
    for (int l = 0; l < n; ++l) {
      LinearRow row;
      row.rhs = a(k, l);
      for (int i = 0; i < n; ++i) {
        if (std::abs(a(k, i)) <= kDropTol) continue;
        for (int j = 0; j < m; ++j) {
          const double v = a(k, i) * a(j, l);
          if (std::abs(v) > kDropTol) row.terms.emplace_back(f.h_index(i, j), v);
        }
      }
      p.add_equality(std::move(row));
    }
  }
  // (AH)_{kl} - (AH)_{lk} = 0 for k < l, where (AH)_{kl} = sum_i A_{ki} H_{il}
  for (int k = 0; k < m; ++k) {
    for (int l = k + 1; l < m; ++l) {
      LinearRow row;
      for (int i = 0; i < n; ++i) {
        if (std::abs(a(k, i)) > kDropTol) row.terms.emplace_back(f.h_index(i, l), a(k, i));
        if (std::abs(a(l, i)) > kDropTol) row.terms.emplace_back(f.h_index(i, k), -a(l, i));
      }
      p.add_equality(std::move(row));
    }
  }
  return p;
}

// K = AA^+ - I, so that HAA^+ - H = HK.
Matrix p2_map(const GinvFormulation& f) {
  return f.range_proj() - Matrix::Identity(f.m(), f.m());
}

// Adds (weight/2) * sum_i H_{i.} K K' H_{i.}' to the objective.
void add_row_quadratic(ConvexProblem& p, const GinvFormulation& f, double weight) {
  if (weight == 0.0) return;
  const Matrix k = p2_map(f);
  const Matrix kk = k * k.transpose();
  for (int i = 0; i < f.n(); ++i) {
    for (int j = 0; j < f.m(); ++j) {
      for (int l = j; l < f.m(); ++l) {
        const double v = weight * kk(j, l);
        if (v != 0.0) p.add_quadratic(f.h_index(i, j), f.h_index(i, l), v);
      }
    }
  }
}

}  // namespace

ConvexProblem build_p13(const GinvFormulation& f) { return base_problem(f, f.num_vars()); }

ConvexProblem build_p13(const Matrix& a) { return build_p13(GinvFormulation(a)); }

void add_p2_equation(ConvexProblem& p, const GinvFormulation& f, int i, int j) {
  if (i < 0 || i >= f.n() || j < 0 || j >= f.m()) {
    throw InvalidArgument("add_p2_equation: index out of range");
  }
  // sum_l H_{il} (AA^+)_{lj} - H_{ij} = 0
  const Matrix& proj = f.range_proj();
  LinearRow row;
  for (int l = 0; l < f.m(); ++l) {
    const double v = proj(l, j) - (l == j ? 1.0 : 0.0);
    if (v != 0.0) row.terms.emplace_back(f.h_index(i, l), v);
  }
  p.add_equality(std::move(row));
}

ConvexProblem build_p123(const GinvFormulation& f) {
  ConvexProblem p = build_p13(f);
  for (int j = 0; j < f.m(); ++j) {
    for (int i = 0; i < f.n(); ++i) add_p2_equation(p, f, i, j);
  }
  return p;
}

ConvexProblem build_p13_with_cuts(const GinvFormulation& f, const P2CutSet& cuts) {
  ConvexProblem p = build_p13(f);
  for (const auto& [j, i] : cuts.keys()) add_p2_equation(p, f, i, j);
  return p;
}

Matrix p2_residual(const Matrix& h, const Matrix& a, const Matrix& a_pinv) {
  if (h.rows() != a.cols() || h.cols() != a.rows()) {
    throw InvalidArgument("p2_residual: H must be n x m");
  }
  return h * (a * a_pinv) - h;
}

std::vector<P2Cut> p2_violations(const Matrix& h, const Matrix& a, const Matrix& a_pinv,
                                 double p2_tol) {
  const Matrix g = p2_residual(h, a, a_pinv);
  std::vector<P2Cut> out;
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      if (std::abs(g(i, j)) > p2_tol) {
        out.push_back(P2Cut{static_cast<int>(i), static_cast<int>(j), g(i, j)});
      }
    }
  }
  return out;
}

ConvexProblem build_auglag_qp(const GinvFormulation& f, const Matrix& lambda, double mu) {
  if (lambda.rows() != f.n() || lambda.cols() != f.m()) {
    throw InvalidArgument("build_auglag_qp: lambda must be n x m");
  }
  if (mu < 0.0) throw InvalidArgument("build_auglag_qp: mu must be nonnegative");
  ConvexProblem p = build_p13(f);
  // <Lambda, HK> = <Lambda K', H>
  const Matrix lin = lambda * p2_map(f).transpose();
  for (int i = 0; i < f.n(); ++i) {
    for (int j = 0; j < f.m(); ++j) p.objective_linear()(f.h_index(i, j)) += lin(i, j);
  }
  add_row_quadratic(p, f, mu);
  return p;
}

ConvexProblem build_penalty_frob_qp(const GinvFormulation& f, double mu) {
  if (mu < 0.0) throw InvalidArgument("build_penalty_frob_qp: mu must be nonnegative");
  ConvexProblem p = build_p13(f);
  add_row_quadratic(p, f, 2.0 * mu);
  return p;
}

ConvexProblem build_penalty_l1_lp(const GinvFormulation& f, double mu) {
  if (mu < 0.0) throw InvalidArgument("build_penalty_l1_lp: mu must be nonnegative");
  const int nm = f.n() * f.m();
  ConvexProblem p = base_problem(f, 3 * nm);
  const Matrix k = p2_map(f);
  for (int i = 0; i < f.n(); ++i) {
    for (int j = 0; j < f.m(); ++j) {
      const int s = 2 * nm + f.h_index(i, j);
      p.objective_linear()(s) = mu;
      LinearRow plus, minus;
      for (int l = 0; l < f.m(); ++l) {
        if (k(l, j) == 0.0) continue;
        plus.terms.emplace_back(f.h_index(i, l), k(l, j));
        minus.terms.emplace_back(f.h_index(i, l), -k(l, j));
      }
      plus.terms.emplace_back(s, -1.0);
      minus.terms.emplace_back(s, -1.0);
      p.add_inequality(std::move(plus));
      p.add_inequality(std::move(minus));
    }
  }
  return p;
}

SplittingProblem build_nuclear_subproblem(const GinvFormulation& f, double mu) {
  if (mu < 0.0) throw InvalidArgument("build_nuclear_subproblem: mu must be nonnegative");
  return SplittingProblem{f.a(), f.a_pinv(), mu};
}

}  // namespace ginv
