#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ginv/dense.hpp"
#include "ginv/methods.hpp"

namespace ginv {

enum class NormKind { L1, L0 };

struct ParetoPoint {
  int rank = 0;
  double l1 = 0.0;
  long l0 = 0;
  std::string method;
  std::string instance_id;
  int iter = 0;
  int run = 0;
};

double norm_of(const ParetoPoint& p, NormKind kind);

// Number of entries of HAA^+ - H with magnitude <= p2_tol.
long p2_satisfied(const Matrix& h, const Matrix& a, const Matrix& a_pinv, double p2_tol = 1e-6);

// Every record of the trace as a point, labelled with method (defaults to
// the trace's method name).
std::vector<ParetoPoint> trace_points(const MethodTrace& trace, const std::string& method = "");

// q dominates p when q.rank <= p.rank and norm(q) <= norm(p) with at least one
// strict. Points equal in both coordinates are kept once (first occurrence).
bool dominates(const ParetoPoint& q, const ParetoPoint& p, NormKind kind = NormKind::L1);
std::vector<ParetoPoint> pareto_front(const std::vector<ParetoPoint>& points,
                                      NormKind kind = NormKind::L1);

// For each rank, the point of minimum norm (earliest on ties).
std::vector<ParetoPoint> per_rank_minimum(const std::vector<ParetoPoint>& points,
                                          NormKind kind = NormKind::L1);

struct AlphaRow {
  std::string method;
  double alpha = 0.0;
  double rank_threshold = 0.0;  // ensemble mean of (1-a) r(H13) + a r(H123)
  double hat_l1 = 0.0;          // percent increase over H13, ensemble mean
  double hat_l0 = 0.0;
  double p2_pct = 0.0;
  double iter = 0.0;
  int instances = 0;            // instances whose trace reaches the threshold
};

// One trace per instance together with that instance's reference ranks.
struct AlphaInput {
  const MethodTrace* trace = nullptr;
  int rank_h13 = 0;
  int rank_h123 = 0;
};

const std::vector<double>& default_alphas();  // 0, .25, .5, .75, 1

// For each alpha picks, per instance, the first iteration with rank at most
// the threshold; H13 is the trace's iteration-0 record.
std::vector<AlphaRow> alpha_table(const std::string& method, const std::vector<AlphaInput>& inputs,
                                  const std::vector<double>& alphas = default_alphas());

// method -> traces, any number per instance (cp-random contributes one per run).
using TracesByMethod = std::map<std::string, std::vector<const MethodTrace*>>;

struct RankCell {
  int found = 0;  // instances with at least one iterate of that rank
  int best = 0;   // instances where the method attains the cross-method minimum
};

struct RankTable {
  std::vector<std::string> methods;
  std::map<int, std::vector<RankCell>, std::greater<int>> rows;  // by rank, descending
};

constexpr double kBestNormTol = 1e-4;

RankTable per_rank_min_norm(const TracesByMethod& traces, NormKind kind = NormKind::L1,
                            double tol = kBestNormTol);

// instance -> per-method count of per-rank minimum points that no point of
// another method dominates (norm comparisons within tol).
struct NondominatedTable {
  std::vector<std::string> methods;
  std::map<std::string, std::vector<int>> rows;
};

NondominatedTable table3a(const TracesByMethod& traces, NormKind kind = NormKind::L1,
                          double tol = kBestNormTol);

// Mean of the final records.
struct SummaryRow {
  std::string method;
  double it = 0.0;
  double l1 = 0.0;
  double l0 = 0.0;
  double rank = 0.0;
  int traces = 0;
  int converged = 0;
};

SummaryRow summarize(const std::string& method, const std::vector<const MethodTrace*>& traces);

// Ensemble-mean curves per iteration, for the per-method iteration plots.
struct CurvePoint {
  int iter = 0;
  double hat_l1 = 0.0;
  double p2_frob = 0.0;
  double rank = 0.0;
  double p2_pct = 0.0;
  int traces = 0;
};

std::vector<CurvePoint> mean_curves(const std::vector<const MethodTrace*>& traces);

void write_table1_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path);
void write_table2_csv(const std::vector<AlphaRow>& rows, const std::filesystem::path& path);
// rank,method,l1_found,l1_best,l0_found,l0_best
void write_table3_csv(const RankTable& l1, const RankTable& l0, const std::filesystem::path& path);
// instance,method,l1_nondominated,l0_nondominated
void write_table3a_csv(const NondominatedTable& l1, const NondominatedTable& l0,
                       const std::filesystem::path& path);
void write_pareto_csv(const std::vector<ParetoPoint>& points, const std::filesystem::path& path);
void write_curves_csv(const std::vector<CurvePoint>& curve, const std::filesystem::path& path);

}  // namespace ginv
