#include "ginv/methods.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "ginv/errors.hpp"
#include "ginv/formulations.hpp"

namespace ginv {

namespace {

struct NameEntry {
  Method method;
  const char* name;
};

constexpr NameEntry kMethodNames[] = {
    {Method::CuttingPlane, "cp"},          {Method::CuttingPlaneRandom, "cp-random"},
    {Method::AugmentedLagrangian, "auglag"}, {Method::Lagrangian, "lagrangian"},
    {Method::PenaltyL1, "pen-l1"},         {Method::PenaltyFrobenius, "pen-frob"},
    {Method::NuclearNorm, "nuclear"},      {Method::P13, "p13"},
    {Method::P123, "p123"},                {Method::Pinv, "pinv"},
};

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

TraceRecord measure(int iter, const Matrix& h, const GinvFormulation& f, const MethodConfig& cfg) {
  TraceRecord rec;
  rec.iter = iter;
  const MatrixNorms norms = matrix_norms(h, cfg.zero_tol);
  rec.l1 = norms.l1;
  rec.l0 = norms.l0;
  rec.rank = numerical_rank(h, cfg.rank_tol);
  const Matrix g = p2_residual(h, f.a(), f.a_pinv());
  rec.p2_satisfied = static_cast<long>((g.array().abs() <= cfg.params.p2_tol).count());
  rec.p2_frob = g.norm();
  rec.p2_max = max_abs(g);
  return rec;
}

MethodTrace start_trace(Method method, const Instance& inst, const MethodConfig& cfg) {
  cfg.params.validate();
  MethodTrace trace;
  trace.method = method;
  trace.instance_id = inst.id;
  trace.params = cfg.params;
  trace.a_rank = numerical_rank(inst.a, cfg.rank_tol);
  return trace;
}

void check_solved(const Solution& sol, const char* what) {
  if (sol.status.code != SolveCode::Optimal) {
    throw SolverFailure(std::string(what) + ": " + to_string(sol.status.code) + " after " +
                        std::to_string(sol.status.iterations) + " iterations");
  }
}

// One subproblem outcome.
struct Step {
  Matrix h;
  double obj = 0.0;
  int solver_iters = 0;
  int cuts_added = 0;
  bool inexact = false;
  std::optional<double> mu;
};

Step solve_lp_step(const ConvexProblem& p, const GinvFormulation& f, const MethodConfig& cfg,
                   const char* what) {
  const Solution sol = solve(p, cfg.ipm);
  check_solved(sol, what);
  Step s;
  s.h = f.h_from(sol.x);
  s.obj = sol.status.primal_obj;
  s.solver_iters = sol.status.iterations;
  return s;
}

// Drives the shared outer loop: iteration 0 is the bare P13 solve, then
// next(k, previous H) produces iterate k until the P2 criterion holds.
// stop(h) may end the run early as converged (Lagrangian division guard).
template <typename Next, typename Stop>
void run_loop(MethodTrace& trace, const GinvFormulation& f, const MethodConfig& cfg, Next next,
              Stop stop) {
  auto record = [&](int k, Step step, double ms) {
    TraceRecord rec = measure(k, step.h, f, cfg);
    rec.mu = step.mu;
    rec.subproblem_obj = step.obj;
    rec.wall_ms = ms;
    rec.solver_iters = step.solver_iters;
    rec.cuts_added = step.cuts_added;
    rec.subproblem_inexact = step.inexact;
    trace.records.push_back(rec);
    trace.final_h = std::move(step.h);
  };

  try {
    auto t0 = Clock::now();
    Step first = solve_lp_step(build_p13(f), f, cfg, "P13");
    record(0, std::move(first), elapsed_ms(t0));
    for (int k = 1;; ++k) {
      if (p2_converged(trace.final_h, f.a(), f.a_pinv(), cfg.params.p2_tol) ||
          stop(trace.final_h)) {
        trace.converged = true;
        trace.termination = Termination::Converged;
        return;
      }
      if (k > cfg.params.max_iter) {
        trace.termination = Termination::MaxIterations;
        trace.message = "iteration cap " + std::to_string(cfg.params.max_iter) + " reached";
        return;
      }
      t0 = Clock::now();
      std::optional<Step> step = next(k, trace.final_h);
      if (!step) {
        trace.termination = Termination::MaxIterations;
        trace.message = "no new cuts available";
        return;
      }
      record(k, std::move(*step), elapsed_ms(t0));
    }
  } catch (const SolverFailure& e) {
    trace.termination = Termination::SolverFailure;
    trace.message = e.what();
  }
  trace.converged = false;
}

void never_stop_early(MethodTrace& trace, const GinvFormulation& f, const MethodConfig& cfg,
                      auto next) {
  run_loop(trace, f, cfg, next, [](const Matrix&) { return false; });
}

double mu_at(const MethodParams& p, int k) { return p.mu0 * std::pow(p.mu_growth, k); }

}  // namespace

std::string method_name(Method m) {
  for (const auto& e : kMethodNames) {
    if (e.method == m) return e.name;
  }
  return "unknown";
}

std::optional<Method> parse_method(const std::string& name) {
  for (const auto& e : kMethodNames) {
    if (name == e.name) return e.method;
  }
  return std::nullopt;
}

std::string reorder_name(ReorderMode mode) {
  switch (mode) {
    case ReorderMode::LexJI: return "lex_ji";
    case ReorderMode::RandomJ: return "random_j";
    case ReorderMode::RandomILexIJ: return "random_i_lex_ij";
  }
  return "lex_ji";
}

std::optional<ReorderMode> parse_reorder(const std::string& name) {
  for (ReorderMode m : {ReorderMode::LexJI, ReorderMode::RandomJ, ReorderMode::RandomILexIJ}) {
    if (reorder_name(m) == name) return m;
  }
  return std::nullopt;
}

std::string termination_name(Termination t) {
  switch (t) {
    case Termination::Converged: return "converged";
    case Termination::MaxIterations: return "max_iterations";
    case Termination::SolverFailure: return "solver_failure";
    case Termination::Reference: return "reference";
  }
  return "unknown";
}

MethodParams MethodParams::defaults(Method m) {
  MethodParams p;
  switch (m) {
    case Method::PenaltyL1:
      p.mu0 = 0.01;
      p.mu_growth = 1.15;
      break;
    case Method::NuclearNorm:
      p.mu0 = 0.05;
      p.mu_growth = 1.20;
      break;
    default:
      p.mu0 = 0.1;
      p.mu_growth = 1.30;
      break;
  }
  return p;
}

void MethodParams::validate() const {
  if (!(mu0 > 0.0)) throw InvalidArgument("mu0 must be positive");
  if (!(mu_growth > 1.0)) throw InvalidArgument("mu_growth must exceed 1");
  if (!(t_fraction > 0.0 && t_fraction <= 1.0)) {
    throw InvalidArgument("t_fraction must lie in (0, 1]");
  }
  if (max_iter < 0) throw InvalidArgument("max_iter must be nonnegative");
  if (!(p2_tol > 0.0)) throw InvalidArgument("p2_tol must be positive");
}

bool p2_converged(const Matrix& h, const Matrix& a, const Matrix& a_pinv, double p2_tol) {
  return max_abs(p2_residual(h, a, a_pinv)) <= p2_tol;
}

MethodTrace cutting_plane_ordered(const Instance& inst, const MethodConfig& cfg,
                                  ReorderMode mode, const std::vector<int>& perm) {
  MethodTrace trace = start_trace(Method::CuttingPlane, inst, cfg);
  trace.params.reorder_mode = mode;
  const GinvFormulation f(inst.a, inst.a_pinv);
  const int n = f.n();
  const int m = f.m();
  const size_t expected = mode == ReorderMode::RandomJ ? static_cast<size_t>(m)
                          : mode == ReorderMode::RandomILexIJ ? static_cast<size_t>(n)
                                                              : 0;
  if (mode != ReorderMode::LexJI) {
    std::vector<int> sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> iota(expected);
    std::iota(iota.begin(), iota.end(), 0);
    if (sorted != iota) throw InvalidArgument("cutting_plane: permutation has wrong size or entries");
    trace.permutation = perm;
  }
  // position of each index within the permutation
  std::vector<int> rank_of(expected);
  for (size_t p = 0; p < expected; ++p) rank_of[static_cast<size_t>(perm[p])] = static_cast<int>(p);

  const long nm = static_cast<long>(n) * m;
  const int t = static_cast<int>(std::max(1L, static_cast<long>(std::floor(
                                                  cfg.params.t_fraction * static_cast<double>(nm)))));

  P2CutSet cuts;
  ConvexProblem lp = build_p13(f);
  never_stop_early(trace, f, cfg, [&](int, const Matrix& h) -> std::optional<Step> {
    std::vector<P2Cut> viol = p2_violations(h, f.a(), f.a_pinv(), cfg.params.p2_tol);
    if (mode == ReorderMode::RandomJ) {
      std::stable_sort(viol.begin(), viol.end(), [&](const P2Cut& x, const P2Cut& y) {
        return std::pair(rank_of[x.j], x.i) < std::pair(rank_of[y.j], y.i);
      });
    } else if (mode == ReorderMode::RandomILexIJ) {
      std::stable_sort(viol.begin(), viol.end(), [&](const P2Cut& x, const P2Cut& y) {
        return std::pair(rank_of[x.i], x.j) < std::pair(rank_of[y.i], y.j);
      });
    }
    int added = 0;
    for (const P2Cut& c : viol) {
      if (added == t) break;
      if (!cuts.insert(c.i, c.j)) continue;
      add_p2_equation(lp, f, c.i, c.j);
      ++added;
    }
    if (added == 0) return std::nullopt;
    Step s = solve_lp_step(lp, f, cfg, "cutting-plane LP");
    s.cuts_added = added;
    return s;
  });
  return trace;
}

MethodTrace cutting_plane(const Instance& inst, const MethodConfig& cfg) {
  return cutting_plane_ordered(inst, cfg, ReorderMode::LexJI, {});
}

std::vector<MethodTrace> cutting_plane_random(const Instance& inst, const MethodConfig& cfg,
                                              int runs) {
  if (runs < 1) throw InvalidArgument("cutting_plane_random: runs must be at least 1");
  cfg.params.validate();
  std::mt19937_64 rng(cfg.params.seed.value_or(0));
  const int first_half = (runs + 1) / 2;
  std::vector<MethodTrace> out;
  out.reserve(static_cast<size_t>(runs));
  for (int r = 0; r < runs; ++r) {
    const ReorderMode mode = r < first_half ? ReorderMode::RandomJ : ReorderMode::RandomILexIJ;
    std::vector<int> perm(static_cast<size_t>(mode == ReorderMode::RandomJ ? inst.m : inst.n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    MethodTrace t = cutting_plane_ordered(inst, cfg, mode, perm);
    t.method = Method::CuttingPlaneRandom;
    t.run = r;
    out.push_back(std::move(t));
  }
  return out;
}

MethodTrace augmented_lagrangian(const Instance& inst, const MethodConfig& cfg) {
  MethodTrace trace = start_trace(Method::AugmentedLagrangian, inst, cfg);
  const GinvFormulation f(inst.a, inst.a_pinv);
  Matrix lambda = Matrix::Zero(f.n(), f.m());
  never_stop_early(trace, f, cfg, [&](int k, const Matrix& h) -> std::optional<Step> {
    const double mu = mu_at(cfg.params, k);
    lambda += mu * p2_residual(h, f.a(), f.a_pinv());
    Step s = solve_lp_step(build_auglag_qp(f, lambda, mu), f, cfg, "augmented-Lagrangian QP");
    s.mu = mu;
    return s;
  });
  return trace;
}

MethodTrace lagrangian_subgradient(const Instance& inst, double z_p123, const MethodConfig& cfg) {
  MethodTrace trace = start_trace(Method::Lagrangian, inst, cfg);
  const GinvFormulation f(inst.a, inst.a_pinv);
  Matrix lambda = Matrix::Zero(f.n(), f.m());
  const double guard = cfg.params.p2_tol;
  run_loop(
      trace, f, cfg,
      [&](int, const Matrix& h) -> std::optional<Step> {
        const Matrix g = p2_residual(h, f.a(), f.a_pinv());
        const double z_prev = trace.records.back().subproblem_obj;
        const double gamma = (z_p123 - z_prev) / g.norm();
        lambda += gamma * g;
        Step s = solve_lp_step(build_auglag_qp(f, lambda, 0.0), f, cfg, "Lagrangian LP");
        s.mu = gamma;
        return s;
      },
      [&](const Matrix& h) { return p2_residual(h, f.a(), f.a_pinv()).norm() <= guard; });
  return trace;
}

MethodTrace penalty_frobenius(const Instance& inst, const MethodConfig& cfg) {
  MethodTrace trace = start_trace(Method::PenaltyFrobenius, inst, cfg);
  const GinvFormulation f(inst.a, inst.a_pinv);
  never_stop_early(trace, f, cfg, [&](int k, const Matrix&) -> std::optional<Step> {
    const double mu = mu_at(cfg.params, k);
    Step s = solve_lp_step(build_penalty_frob_qp(f, mu), f, cfg, "Frobenius-penalty QP");
    s.mu = mu;
    return s;
  });
  return trace;
}

MethodTrace penalty_l1(const Instance& inst, const MethodConfig& cfg) {
  MethodTrace trace = start_trace(Method::PenaltyL1, inst, cfg);
  const GinvFormulation f(inst.a, inst.a_pinv);
  never_stop_early(trace, f, cfg, [&](int k, const Matrix&) -> std::optional<Step> {
    const double mu = mu_at(cfg.params, k);
    Step s = solve_lp_step(build_penalty_l1_lp(f, mu), f, cfg, "1-norm-penalty LP");
    s.mu = mu;
    return s;
  });
  return trace;
}

MethodTrace nuclear_norm_method(const Instance& inst, const MethodConfig& cfg) {
  MethodTrace trace = start_trace(Method::NuclearNorm, inst, cfg);
  const GinvFormulation f(inst.a, inst.a_pinv);
  never_stop_early(trace, f, cfg, [&](int k, const Matrix& h) -> std::optional<Step> {
    const double mu = mu_at(cfg.params, k);
    const SplittingResult r = solve_splitting(build_nuclear_subproblem(f, mu), cfg.admm, h);
    if (r.stalled) {
      throw SolverFailure("nuclear-norm subproblem: splitting stalled after " +
                          std::to_string(r.iterations) + " iterations (primal residual " +
                          std::to_string(r.primal_residual) + ")");
    }
    Step s;
    s.inexact = !r.converged;
    s.h = r.h;
    s.obj = r.objective;
    s.solver_iters = r.iterations;
    s.mu = mu;
    return s;
  });
  return trace;
}

MethodTrace reference_trace(const Instance& inst, Method which, const MethodConfig& cfg) {
  MethodTrace trace = start_trace(which, inst, cfg);
  const GinvFormulation f(inst.a, inst.a_pinv);
  const auto t0 = Clock::now();
  Step s;
  try {
    switch (which) {
      case Method::Pinv:
        s.h = inst.a_pinv;
        s.obj = matrix_norms(s.h, cfg.zero_tol).l1;
        break;
      case Method::P13:
        s = solve_lp_step(build_p13(f), f, cfg, "P13");
        break;
      case Method::P123:
        s = solve_lp_step(build_p123(f), f, cfg, "P123");
        break;
      default:
        throw InvalidArgument("reference_trace: " + method_name(which) + " is iterative");
    }
  } catch (const SolverFailure& e) {
    trace.termination = Termination::SolverFailure;
    trace.message = e.what();
    return trace;
  }
  TraceRecord rec = measure(0, s.h, f, cfg);
  rec.subproblem_obj = s.obj;
  rec.solver_iters = s.solver_iters;
  rec.wall_ms = elapsed_ms(t0);
  trace.records.push_back(rec);
  trace.final_h = std::move(s.h);
  trace.converged = p2_converged(trace.final_h, f.a(), f.a_pinv(), cfg.params.p2_tol);
  trace.termination = Termination::Reference;
  return trace;
}

double solve_z_p123(const Instance& inst, const IpmOptions& ipm) {
  const GinvFormulation f(inst.a, inst.a_pinv);
  const Solution sol = solve(build_p123(f), ipm);
  check_solved(sol, "P123");
  return sol.status.primal_obj;
}

}  // namespace ginv
