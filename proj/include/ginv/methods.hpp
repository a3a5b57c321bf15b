#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ginv/convex.hpp"
#include "ginv/dense.hpp"
#include "ginv/instances.hpp"
#include "ginv/splitting.hpp"

namespace ginv {

enum class Method {
  CuttingPlane,
  CuttingPlaneRandom,
  AugmentedLagrangian,
  Lagrangian,
  PenaltyL1,
  PenaltyFrobenius,
  NuclearNorm,
  // Reference points, single-record traces.
  P13,
  P123,
  Pinv,
};

std::string method_name(Method m);  // cli spelling: cp, cp-random, auglag, ...
std::optional<Method> parse_method(const std::string& name);

enum class ReorderMode { LexJI, RandomJ, RandomILexIJ };

std::string reorder_name(ReorderMode mode);
std::optional<ReorderMode> parse_reorder(const std::string& name);

struct MethodParams {
  double mu0 = 0.1;
  double mu_growth = 1.30;
  double t_fraction = 0.01;
  int max_iter = 200;
  double p2_tol = 1e-6;
  std::optional<std::uint64_t> seed;
  ReorderMode reorder_mode = ReorderMode::LexJI;

  // The tuned schedules per method; methods without a schedule get the
  // augmented-Lagrangian values, which they ignore.
  static MethodParams defaults(Method m);
  void validate() const;  // throws InvalidArgument
};

struct MethodConfig {
  MethodParams params;
  double rank_tol = 1e-5;
  double zero_tol = 1e-6;
  IpmOptions ipm;
  SplittingOptions admm;
};

struct TraceRecord {
  int iter = 0;
  double l1 = 0.0;
  long l0 = 0;
  int rank = 0;
  long p2_satisfied = 0;  // entries with |(HAA^+ - H)_ij| <= p2_tol
  double p2_frob = 0.0;
  double p2_max = 0.0;
  std::optional<double> mu;
  double subproblem_obj = 0.0;
  double wall_ms = 0.0;
  int solver_iters = 0;
  int cuts_added = 0;
  bool subproblem_inexact = false;  // splitting hit its cap within sqrt(tol)
};

// Reference marks a completed single-solve trace (A^+, H13, H123).
enum class Termination { Converged, MaxIterations, SolverFailure, Reference };

std::string termination_name(Termination t);

struct MethodTrace {
  Method method = Method::CuttingPlane;
  std::string instance_id;
  MethodParams params;
  std::vector<TraceRecord> records;
  Matrix final_h;
  bool converged = false;
  Termination termination = Termination::MaxIterations;
  std::string message;
  int a_rank = 0;
  int run = 0;                    // run index within a cp-random batch
  std::vector<int> permutation;   // index permutation used by random reordering
};

// Converged iff max |(H A A^+ - H)_ij| <= p2_tol.
bool p2_converged(const Matrix& h, const Matrix& a, const Matrix& a_pinv, double p2_tol);

// Up to max(1, floor(t_fraction * n * m)) violated cuts per iteration, taken
// in (j, i) lexical order.
MethodTrace cutting_plane(const Instance& inst, const MethodConfig& cfg);

// Cutting plane with an explicit reordering: perm reorders j (RandomJ) or i
// (RandomILexIJ). Lexical order is (perm position, other index).
MethodTrace cutting_plane_ordered(const Instance& inst, const MethodConfig& cfg,
                                  ReorderMode mode, const std::vector<int>& perm);

// runs traces; the first ceil(runs/2) reorder j at random, the rest reorder i
// and scan (i, j). Permutations come from cfg.params.seed (0 when unset).
std::vector<MethodTrace> cutting_plane_random(const Instance& inst, const MethodConfig& cfg,
                                              int runs = 20);

MethodTrace augmented_lagrangian(const Instance& inst, const MethodConfig& cfg);

// Subgradient ascent on the Lagrangian dual with step (z_p123 - z_k)/||G_k||_F.
MethodTrace lagrangian_subgradient(const Instance& inst, double z_p123,
                                   const MethodConfig& cfg);

MethodTrace penalty_frobenius(const Instance& inst, const MethodConfig& cfg);

MethodTrace penalty_l1(const Instance& inst, const MethodConfig& cfg);

MethodTrace nuclear_norm_method(const Instance& inst, const MethodConfig& cfg);

// Single-record traces for A^+, H13 and H123.
MethodTrace reference_trace(const Instance& inst, Method which, const MethodConfig& cfg);

// Optimal value of P123 (throws SolverFailure if the solve is not optimal).
double solve_z_p123(const Instance& inst, const IpmOptions& ipm = {});

}  // namespace ginv
