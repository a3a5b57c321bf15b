#include "ginv/convex.hpp"

#include <algorithm>
#include <cmath>
#include <Eigen/SparseCholesky>
#include <numeric>
#include <optional>

#include "ginv/errors.hpp"

namespace ginv {

using SpMat = Eigen::SparseMatrix<double>;
using RowSpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

ConvexProblem::ConvexProblem(int num_vars)
    : num_vars_(num_vars),
      c_(Vector::Zero(num_vars)),
      lower_(Vector::Constant(num_vars, -std::numeric_limits<double>::infinity())),
      upper_(Vector::Constant(num_vars, std::numeric_limits<double>::infinity())) {
  if (num_vars <= 0) throw InvalidArgument("ConvexProblem: num_vars must be positive");
}

void ConvexProblem::add_quadratic(int i, int j, double v) {
  q_terms_.emplace_back(i, j, v);
  if (i != j) q_terms_.emplace_back(j, i, v);
}

void ConvexProblem::add_equality(LinearRow row) { eq_.push_back(std::move(row)); }

void ConvexProblem::add_inequality(LinearRow row) { ineq_.push_back(std::move(row)); }

void ConvexProblem::set_bounds(int var, double lower, double upper) {
  if (var < 0 || var >= num_vars_) throw InvalidArgument("set_bounds: index out of range");
  if (lower > upper) throw InvalidArgument("set_bounds: lower > upper");
  lower_(var) = lower;
  upper_(var) = upper;
}

double ConvexProblem::objective_value(const Vector& x) const {
  double v = c_.dot(x);
  for (const auto& t : q_terms_) v += 0.5 * t.value() * x(t.row()) * x(t.col());
  return v;
}

void ConvexProblem::validate() const {
  if (!c_.allFinite()) throw InvalidArgument("ConvexProblem: non-finite objective");
  auto check_rows = [&](const std::vector<LinearRow>& rows, const char* what) {
    for (const auto& r : rows) {
      if (!std::isfinite(r.rhs)) {
        throw InvalidArgument(std::string("ConvexProblem: non-finite rhs in ") + what);
      }
      for (const auto& [j, v] : r.terms) {
        if (j < 0 || j >= num_vars_) {
          throw InvalidArgument(std::string("ConvexProblem: index out of range in ") + what);
        }
        if (!std::isfinite(v)) {
          throw InvalidArgument(std::string("ConvexProblem: non-finite coefficient in ") + what);
        }
      }
    }
  };
  check_rows(eq_, "equalities");
  check_rows(ineq_, "inequalities");
  if (q_terms_.empty()) return;

  SpMat q(num_vars_, num_vars_);
  for (const auto& t : q_terms_) {
    if (t.row() < 0 || t.row() >= num_vars_ || t.col() < 0 || t.col() >= num_vars_) {
      throw InvalidArgument("ConvexProblem: quadratic index out of range");
    }
    if (!std::isfinite(t.value())) throw InvalidArgument("ConvexProblem: non-finite Q");
  }
  q.setFromTriplets(q_terms_.begin(), q_terms_.end());
  const SpMat qt = q.transpose();
  const double scale = 1.0 + q.coeffs().cwiseAbs().maxCoeff();
  SpMat asym = q - qt;
  asym.prune(0.0);
  if (asym.nonZeros() > 0 && asym.coeffs().cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidArgument("ConvexProblem: Q is not symmetric");
  }
  SpMat shifted = q;
  for (int i = 0; i < num_vars_; ++i) shifted.coeffRef(i, i) += 1e-9 * scale;
  Eigen::SimplicialLDLT<SpMat> ldlt(shifted);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() < -1e-9 * scale) {
    throw InvalidArgument("ConvexProblem: Q is not positive semidefinite");
  }
}

std::string to_string(SolveCode code) {
  switch (code) {
    case SolveCode::Optimal: return "optimal";
    case SolveCode::Infeasible: return "infeasible";
    case SolveCode::Unbounded: return "unbounded";
    case SolveCode::MaxIterations: return "max_iterations";
    case SolveCode::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

namespace {

SpMat rows_to_sparse(const std::vector<LinearRow>& rows, int n) {
  std::vector<Eigen::Triplet<double>> trip;
  for (size_t r = 0; r < rows.size(); ++r) {
    for (const auto& [j, v] : rows[r].terms) trip.emplace_back(static_cast<int>(r), j, v);
  }
  SpMat m(static_cast<Eigen::Index>(rows.size()), n);
  m.setFromTriplets(trip.begin(), trip.end());
  m.prune(0.0);
  return m;
}

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Indices of a maximal linearly independent subset of the rows of e, in
// ascending order.
std::vector<int> independent_rows(const SpMat& e, double tol) {
  std::vector<int> used_cols;
  for (Eigen::Index j = 0; j < e.cols(); ++j) {
    if (e.col(j).nonZeros() > 0) used_cols.push_back(static_cast<int>(j));
  }
  if (used_cols.empty()) return {};
  Matrix et(static_cast<Eigen::Index>(used_cols.size()), e.rows());
  for (size_t k = 0; k < used_cols.size(); ++k) {
    et.row(static_cast<Eigen::Index>(k)) = Vector(e.col(used_cols[k])).transpose();
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(et);
  qr.setThreshold(tol);
  const Eigen::Index rank = qr.rank();
  std::vector<int> kept;
  for (Eigen::Index k = 0; k < rank; ++k) kept.push_back(qr.colsPermutation().indices()(k));
  std::sort(kept.begin(), kept.end());
  return kept;
}

// Selects the columns listed in cols (in order) from m.
SpMat select_cols(const SpMat& m, const std::vector<int>& cols) {
  std::vector<Eigen::Triplet<double>> trip;
  for (size_t k = 0; k < cols.size(); ++k) {
    for (SpMat::InnerIterator it(m, cols[k]); it; ++it) {
      trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(k), it.value());
    }
  }
  SpMat out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

// A condensed variable: no equality coefficients, no Q entries, and exactly
// two inequality rows, neither shared with another condensed variable. The
// epigraph variables of an l1 objective (|h| <= z) have this shape.
struct Condensed {
  int var;
  int row1, row2;
  double g1, g2;  // coefficients of var in row1, row2
};

// Reduced KKT system
//   [Q + G'DG  E'] [dx]   [r1]
//   [E         0 ] [dy] = [r2]
// with the condensed variables eliminated. Each condensed pair contributes
// w v v' with v = g2 a1 - g1 a2 and w = 1 / (g1^2/d2 + g2^2/d1), which avoids
// the cancellation of the textbook Schur complement when d1 / d2 is extreme.
class KktSystem {
 public:
  KktSystem(const SpMat& q, const SpMat& e, const SpMat& g, std::vector<int> red,
            std::vector<Condensed> cond)
      : q_(q), e_(e), g_(g), red_(std::move(red)), cond_(std::move(cond)) {
    g_r_ = RowSpMat(select_cols(g_, red_));
    e_r_ = Matrix(select_cols(e_, red_));
    q_rr_ = Matrix(select_cols(SpMat(select_cols(q_, red_).transpose()), red_));
    std::vector<char> in_pair(static_cast<size_t>(g_.rows()), 0);
    for (const auto& c : cond_) {
      in_pair[static_cast<size_t>(c.row1)] = 1;
      in_pair[static_cast<size_t>(c.row2)] = 1;
    }
    for (Eigen::Index r = 0; r < g_.rows(); ++r) {
      if (!in_pair[static_cast<size_t>(r)]) free_rows_.push_back(static_cast<int>(r));
    }
  }

  bool factor(const Vector& d) {
    d_ = d;
    const auto nr = static_cast<Eigen::Index>(red_.size());
    const auto nc = static_cast<Eigen::Index>(cond_.size());
    std::vector<Eigen::Triplet<double>> trip;
    int out_row = 0;
    for (int r : free_rows_) {
      const double w = std::sqrt(d(r));
      for (RowSpMat::InnerIterator it(g_r_, r); it; ++it) {
        trip.emplace_back(out_row, static_cast<int>(it.col()), w * it.value());
      }
      ++out_row;
    }
    mdd_.resize(nc);
    std::vector<Eigen::Triplet<double>> rd_trip;
    for (Eigen::Index k = 0; k < nc; ++k) {
      const Condensed& c = cond_[static_cast<size_t>(k)];
      const double d1 = d(c.row1);
      const double d2 = d(c.row2);
      mdd_(k) = d1 * c.g1 * c.g1 + d2 * c.g2 * c.g2;
      const double w = std::sqrt(1.0 / (c.g1 * c.g1 / d2 + c.g2 * c.g2 / d1));
      for (RowSpMat::InnerIterator it(g_r_, c.row1); it; ++it) {
        trip.emplace_back(out_row, static_cast<int>(it.col()), w * c.g2 * it.value());
        rd_trip.emplace_back(static_cast<int>(it.col()), static_cast<int>(k),
                             d1 * c.g1 * it.value());
      }
      for (RowSpMat::InnerIterator it(g_r_, c.row2); it; ++it) {
        trip.emplace_back(out_row, static_cast<int>(it.col()), -w * c.g1 * it.value());
        rd_trip.emplace_back(static_cast<int>(it.col()), static_cast<int>(k),
                             d2 * c.g2 * it.value());
      }
      ++out_row;
    }
    SpMat b(out_row, nr);
    b.setFromTriplets(trip.begin(), trip.end());
    m_rd_.resize(nr, nc);
    m_rd_.setFromTriplets(rd_trip.begin(), rd_trip.end());

    Matrix mt = q_rr_;
    mt += Matrix(SpMat(b.transpose() * b));
    // symmetric Jacobi scaling; the barrier diagonal spans many decades
    jacobi_.resize(nr);
    const double dmax = nr ? mt.diagonal().cwiseAbs().maxCoeff() : 0.0;
    for (Eigen::Index k = 0; k < nr; ++k) {
      jacobi_(k) = 1.0 / std::sqrt(std::max(mt(k, k), 1e-300 + 1e-30 * dmax));
    }
    mt = jacobi_.asDiagonal() * mt * jacobi_.asDiagonal();
    for (double reg = 1e-14; reg < 1e-5; reg *= 100.0) {
      Matrix shifted = mt;
      shifted.diagonal().array() += reg;
      llt_.compute(shifted);
      if (llt_.info() != Eigen::Success) continue;
      if (e_r_.rows() == 0) return true;
      Matrix w = jacobi_.asDiagonal() * e_r_.transpose();
      llt_.matrixL().solveInPlace(w);
      Matrix s = w.transpose() * w;
      const double sscale = 1.0 + s.diagonal().cwiseAbs().maxCoeff();
      s.diagonal().array() += 1e-14 * sscale;
      schur_.compute(s);
      if (schur_.info() == Eigen::Success) return true;
    }
    return false;
  }

  // Solves the system, then refines against the exact operator.
  void solve(const Vector& r1, const Vector& r2, Vector& dx, Vector& dy) const {
    solve_once(r1, r2, dx, dy);
    for (int pass = 0; pass < 3; ++pass) {
      const Vector res1 = r1 - (q_ * dx + g_.transpose() * d_.cwiseProduct(g_ * dx) +
                                e_.transpose() * dy);
      const Vector res2 = r2 - e_ * dx;
      if (std::max(inf_norm(res1), inf_norm(res2)) <=
          1e-15 * (1.0 + std::max(inf_norm(r1), inf_norm(r2)))) {
        break;
      }
      Vector cx, cy;
      solve_once(res1, res2, cx, cy);
      dx += cx;
      dy += cy;
    }
  }

 private:
  Vector m_solve(const Vector& v) const {
    return jacobi_.cwiseProduct(llt_.solve(jacobi_.cwiseProduct(v)));
  }

  void solve_once(const Vector& r1, const Vector& r2, Vector& dx, Vector& dy) const {
    const auto nr = static_cast<Eigen::Index>(red_.size());
    const auto nc = static_cast<Eigen::Index>(cond_.size());
    Vector r1r(nr), r1d(nc);
    for (Eigen::Index k = 0; k < nr; ++k) r1r(k) = r1(red_[static_cast<size_t>(k)]);
    for (Eigen::Index k = 0; k < nc; ++k) r1d(k) = r1(cond_[static_cast<size_t>(k)].var);
    Vector rt = r1r;
    if (nc > 0) rt -= m_rd_ * r1d.cwiseQuotient(mdd_);
    Vector dxr;
    if (e_r_.rows() > 0) {
      const Vector t = e_r_ * m_solve(rt) - r2;
      dy = schur_.solve(t);
      dxr = m_solve(rt - e_r_.transpose() * dy);
    } else {
      dy.resize(0);
      dxr = m_solve(rt);
    }
    dx.resize(e_.cols());
    for (Eigen::Index k = 0; k < nr; ++k) dx(red_[static_cast<size_t>(k)]) = dxr(k);
    if (nc > 0) {
      const Vector dxd = (r1d - m_rd_.transpose() * dxr).cwiseQuotient(mdd_);
      for (Eigen::Index k = 0; k < nc; ++k) dx(cond_[static_cast<size_t>(k)].var) = dxd(k);
    }
  }

  const SpMat& q_;
  const SpMat& e_;
  const SpMat& g_;
  std::vector<int> red_;
  std::vector<Condensed> cond_;
  std::vector<int> free_rows_;
  RowSpMat g_r_;
  SpMat m_rd_;
  Matrix e_r_, q_rr_;
  Vector mdd_, d_, jacobi_;
  Eigen::LLT<Matrix> llt_;
  Eigen::LLT<Matrix> schur_;
};

void partition_variables(const SpMat& q, const SpMat& e, const SpMat& g,
                         std::vector<int>& red, std::vector<Condensed>& cond) {
  const Eigen::Index n = g.cols();
  std::vector<char> row_taken(static_cast<size_t>(g.rows()), 0);
  for (Eigen::Index j = 0; j < n; ++j) {
    bool candidate = e.col(j).nonZeros() == 0 && q.col(j).nonZeros() == 0 &&
                     g.col(j).nonZeros() == 2;
    for (SpMat::InnerIterator it(g, j); it && candidate; ++it) {
      if (row_taken[static_cast<size_t>(it.row())]) candidate = false;
    }
    if (!candidate) {
      red.push_back(static_cast<int>(j));
      continue;
    }
    SpMat::InnerIterator it(g, j);
    Condensed c{static_cast<int>(j), static_cast<int>(it.row()), 0, it.value(), 0.0};
    ++it;
    c.row2 = static_cast<int>(it.row());
    c.g2 = it.value();
    row_taken[static_cast<size_t>(c.row1)] = 1;
    row_taken[static_cast<size_t>(c.row2)] = 1;
    cond.push_back(c);
  }
}

double max_step(const Vector& v, const Vector& dv) {
  double alpha = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
  }
  return alpha;
}

}  // namespace

Solution solve(const ConvexProblem& problem, const IpmOptions& options) {
  problem.validate();
  const int n = problem.num_vars();

  // Inequalities: user rows first, then finite bounds.
  std::vector<LinearRow> ineq = problem.inequalities();
  const auto user_ineq = static_cast<Eigen::Index>(ineq.size());
  for (int j = 0; j < n; ++j) {
    if (std::isfinite(problem.lower_bounds()(j))) {
      ineq.push_back(LinearRow{{{j, -1.0}}, -problem.lower_bounds()(j)});
    }
    if (std::isfinite(problem.upper_bounds()(j))) {
      ineq.push_back(LinearRow{{{j, 1.0}}, problem.upper_bounds()(j)});
    }
  }
  const SpMat g = rows_to_sparse(ineq, n);
  Vector h(static_cast<Eigen::Index>(ineq.size()));
  for (size_t r = 0; r < ineq.size(); ++r) h(static_cast<Eigen::Index>(r)) = ineq[r].rhs;

  const SpMat e_full = rows_to_sparse(problem.equalities(), n);
  Vector f_full(static_cast<Eigen::Index>(problem.equalities().size()));
  for (size_t r = 0; r < problem.equalities().size(); ++r) {
    f_full(static_cast<Eigen::Index>(r)) = problem.equalities()[r].rhs;
  }
  const std::vector<int> kept = independent_rows(e_full, options.presolve_tol);
  std::vector<LinearRow> kept_rows;
  for (int r : kept) kept_rows.push_back(problem.equalities()[static_cast<size_t>(r)]);
  const SpMat e = rows_to_sparse(kept_rows, n);
  Vector f(static_cast<Eigen::Index>(kept.size()));
  for (size_t k = 0; k < kept.size(); ++k) f(static_cast<Eigen::Index>(k)) = f_full(kept[k]);

  SpMat q(n, n);
  q.setFromTriplets(problem.quadratic_terms().begin(), problem.quadratic_terms().end());
  const Vector& c = problem.objective_linear();

  std::vector<int> red;
  std::vector<Condensed> cond;
  partition_variables(q, e, g, red, cond);
  KktSystem kkt(q, e, g, std::move(red), std::move(cond));

  const Eigen::Index mg = g.rows();
  const Eigen::Index p = e.rows();
  const double b_scale = 1.0 + std::max(inf_norm(f_full), inf_norm(h));
  const double c_scale = 1.0 + inf_norm(c);

  Solution sol;
  sol.eq_rows_kept = static_cast<int>(p);
  sol.duals_eq = Vector::Zero(e_full.rows());
  sol.duals_ineq = Vector::Zero(user_ineq);
  auto finish = [&](const Vector& x, const Vector& y, const Vector& z) {
    sol.x = x;
    for (size_t k = 0; k < kept.size(); ++k) sol.duals_eq(kept[k]) = y(static_cast<Eigen::Index>(k));
    sol.duals_ineq = z.head(user_ineq);
    // Rows dropped by presolve must still hold.
    if (sol.status.code == SolveCode::Optimal && e_full.rows() > 0) {
      const double r = inf_norm(e_full * x - f_full);
      if (r > std::sqrt(options.tol) * b_scale) sol.status.code = SolveCode::Infeasible;
    }
    return sol;
  };

  // Initial point (least-squares primal and dual with unit scaling).
  Vector x(n), y(p), z(mg), s(mg);
  if (!kkt.factor(Vector::Ones(mg))) {
    sol.status.code = SolveCode::NumericalFailure;
    return finish(Vector::Zero(n), Vector::Zero(p), Vector::Zero(mg));
  }
  kkt.solve(g.transpose() * h, f, x, y);
  s = h - g * x;
  {
    Vector xd, yd;
    kkt.solve(-c, Vector::Zero(p), xd, yd);
    z = g * xd;
  }
  if (mg > 0) {
    const double ap = -s.minCoeff();
    if (ap >= -1e-8 * std::max(1.0, s.norm())) s.array() += 1.0 + ap;
    const double ad = -z.minCoeff();
    if (ad >= -1e-8 * std::max(1.0, z.norm())) z.array() += 1.0 + ad;
  }

  for (int it = 0; it <= options.max_iter; ++it) {
    const Vector qx = q * x;
    const Vector rd = qx + c + e.transpose() * y + g.transpose() * z;
    const Vector rp = e * x - f;
    const Vector rg = g * x + s - h;
    const double gap = mg > 0 ? s.dot(z) : 0.0;
    const double xqx = x.dot(qx);
    const double pobj = c.dot(x) + 0.5 * xqx;
    const double dobj = -0.5 * xqx - f.dot(y) - h.dot(z);
    const double pres = std::max(inf_norm(rp), inf_norm(rg)) / b_scale;
    const double dres = inf_norm(rd) / c_scale;

    sol.status.iterations = it;
    sol.status.primal_obj = pobj;
    sol.status.dual_obj = dobj;
    sol.status.duality_gap = gap;
    sol.status.primal_residual = pres;
    sol.status.dual_residual = dres;

    if (!x.allFinite() || !z.allFinite() || !s.allFinite()) {
      sol.status.code = SolveCode::NumericalFailure;
      return finish(Vector::Zero(n), Vector::Zero(p), Vector::Zero(mg));
    }
    if (pres <= options.tol && dres <= options.tol &&
        gap <= options.tol * (1.0 + std::abs(pobj)) &&
        std::abs(pobj - dobj) <= options.tol * (1.0 + std::abs(pobj))) {
      sol.status.code = SolveCode::Optimal;
      return finish(x, y, z);
    }

    // Certificates of infeasibility / unboundedness along diverging iterates.
    const double dual_size = std::max(inf_norm(y), inf_norm(z));
    const double cert_dual = -(f.dot(y) + h.dot(z));
    if (cert_dual > 0.0 && dual_size > 1e6 * c_scale &&
        inf_norm(e.transpose() * y + g.transpose() * z) <= 1e-8 * cert_dual) {
      sol.status.code = SolveCode::Infeasible;
      return finish(x, y, z);
    }
    const double cert_primal = -c.dot(x);
    if (cert_primal > 0.0 && inf_norm(x) > 1e6 * b_scale) {
      const Vector gx = g * x;
      const double up = gx.size() ? std::max(0.0, gx.maxCoeff()) : 0.0;
      if (inf_norm(e * x) <= 1e-8 * cert_primal && up <= 1e-8 * cert_primal &&
          inf_norm(qx) <= 1e-8 * cert_primal) {
        sol.status.code = SolveCode::Unbounded;
        return finish(x, y, z);
      }
    }
    if (it == options.max_iter) break;

    const Vector d = mg > 0 ? Vector(z.cwiseQuotient(s)) : Vector();
    if (!kkt.factor(d)) {
      sol.status.code = SolveCode::NumericalFailure;
      return finish(x, y, z);
    }
    const double mu = mg > 0 ? gap / static_cast<double>(mg) : 0.0;

    // dz = (rc + z.*rg)./s + D G dx;  M dx + E'dy = -rd - G'((rc + z.*rg)./s)
    auto direction = [&](const Vector& rc, Vector& dx, Vector& dy, Vector& dz,
                         Vector& ds) {
      const Vector w = (rc + z.cwiseProduct(rg)).cwiseQuotient(s);
      kkt.solve(-rd - g.transpose() * w, -rp, dx, dy);
      const Vector gdx = g * dx;
      dz = w + d.cwiseProduct(gdx);
      ds = -rg - gdx;
    };

    Vector dx, dy, dz, ds;
    direction(-s.cwiseProduct(z), dx, dy, dz, ds);
    double alpha_aff = std::min({1.0, max_step(s, ds), max_step(z, dz)});
    double sigma = 0.0;
    if (mg > 0 && mu > 0.0) {
      const double mu_aff =
          (s + alpha_aff * ds).dot(z + alpha_aff * dz) / static_cast<double>(mg);
      sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);
      // Hold complementarity back while the residuals lag behind it.
      const double rel_gap = gap / (1.0 + std::abs(pobj));
      const double infeas = std::max(pres, dres);
      if (infeas > options.tol && infeas > 10.0 * rel_gap) {
        sigma = std::max(sigma, std::min(0.5, 0.1 * infeas / rel_gap));
      }
    }
    const Vector rc = -s.cwiseProduct(z) - ds.cwiseProduct(dz) +
                      Vector::Constant(mg, sigma * mu);
    direction(rc, dx, dy, dz, ds);
    const double alpha = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(z, dz)));

    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
  }
  sol.status.code = SolveCode::MaxIterations;
  return finish(x, y, z);
}

}  // namespace ginv
