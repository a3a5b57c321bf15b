#include "ginv/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "ginv/errors.hpp"
#include "ginv/formulations.hpp"

namespace ginv {

namespace {

std::ofstream open_csv(const std::filesystem::path& path, const char* header) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.precision(10);
  out << header << '\n';
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// instance -> method -> points
using PointIndex = std::map<std::string, std::map<std::string, std::vector<ParetoPoint>>>;

PointIndex index_points(const TracesByMethod& traces) {
  PointIndex idx;
  for (const auto& [method, list] : traces) {
    for (const MethodTrace* t : list) {
      auto pts = trace_points(*t, method);
      auto& dst = idx[t->instance_id][method];
      dst.insert(dst.end(), pts.begin(), pts.end());
    }
  }
  return idx;
}

std::vector<std::string> method_names(const TracesByMethod& traces) {
  std::vector<std::string> out;
  for (const auto& kv : traces) out.push_back(kv.first);
  return out;
}

bool dominates_tol(const ParetoPoint& q, const ParetoPoint& p, NormKind kind, double tol) {
  const double nq = norm_of(q, kind);
  const double np = norm_of(p, kind);
  return q.rank <= p.rank && nq <= np + tol && (q.rank < p.rank || nq < np - tol);
}

}  // namespace

double norm_of(const ParetoPoint& p, NormKind kind) {
  return kind == NormKind::L1 ? p.l1 : static_cast<double>(p.l0);
}

long p2_satisfied(const Matrix& h, const Matrix& a, const Matrix& a_pinv, double p2_tol) {
  return static_cast<long>((p2_residual(h, a, a_pinv).array().abs() <= p2_tol).count());
}

std::vector<ParetoPoint> trace_points(const MethodTrace& trace, const std::string& method) {
  std::vector<ParetoPoint> out;
  out.reserve(trace.records.size());
  const std::string label = method.empty() ? method_name(trace.method) : method;
  for (const auto& r : trace.records) {
    out.push_back(ParetoPoint{r.rank, r.l1, r.l0, label, trace.instance_id, r.iter, trace.run});
  }
  return out;
}

bool dominates(const ParetoPoint& q, const ParetoPoint& p, NormKind kind) {
  const double nq = norm_of(q, kind);
  const double np = norm_of(p, kind);
  return q.rank <= p.rank && nq <= np && (q.rank < p.rank || nq < np);
}

std::vector<ParetoPoint> pareto_front(const std::vector<ParetoPoint>& points, NormKind kind) {
  std::vector<ParetoPoint> out;
  for (size_t i = 0; i < points.size(); ++i) {
    const ParetoPoint& p = points[i];
    bool keep = true;
    for (size_t k = 0; k < points.size() && keep; ++k) {
      if (k != i && dominates(points[k], p, kind)) keep = false;
    }
    if (!keep) continue;
    const bool duplicate = std::any_of(out.begin(), out.end(), [&](const ParetoPoint& q) {
      return q.rank == p.rank && norm_of(q, kind) == norm_of(p, kind);
    });
    if (!duplicate) out.push_back(p);
  }
  return out;
}

std::vector<ParetoPoint> per_rank_minimum(const std::vector<ParetoPoint>& points, NormKind kind) {
  std::map<int, ParetoPoint> best;
  for (const auto& p : points) {
    auto it = best.find(p.rank);
    if (it == best.end() || norm_of(p, kind) < norm_of(it->second, kind)) best[p.rank] = p;
  }
  std::vector<ParetoPoint> out;
  for (auto it = best.rbegin(); it != best.rend(); ++it) out.push_back(it->second);
  return out;
}

const std::vector<double>& default_alphas() {
  static const std::vector<double> alphas{0.0, 0.25, 0.5, 0.75, 1.0};
  return alphas;
}

std::vector<AlphaRow> alpha_table(const std::string& method, const std::vector<AlphaInput>& inputs,
                                  const std::vector<double>& alphas) {
  std::vector<AlphaRow> rows;
  for (double alpha : alphas) {
    AlphaRow row;
    row.method = method;
    row.alpha = alpha;
    int counted = 0;
    for (const auto& in : inputs) {
      if (in.trace == nullptr || in.trace->records.empty()) {
        throw InvalidArgument("alpha_table: empty trace");
      }
      const double thr = (1.0 - alpha) * in.rank_h13 + alpha * in.rank_h123;
      row.rank_threshold += thr;
      const auto& recs = in.trace->records;
      const auto hit = std::find_if(recs.begin(), recs.end(), [&](const TraceRecord& r) {
        return r.rank <= thr + 1e-9;
      });
      if (hit == recs.end()) continue;
      const TraceRecord& base = recs.front();
      const double nm = static_cast<double>(in.trace->final_h.size());
      row.hat_l1 += base.l1 > 0 ? (hit->l1 - base.l1) / base.l1 * 100.0 : 0.0;
      row.hat_l0 += base.l0 > 0 ? static_cast<double>(hit->l0 - base.l0) /
                                      static_cast<double>(base.l0) * 100.0
                                : 0.0;
      row.p2_pct += nm > 0 ? static_cast<double>(hit->p2_satisfied) / nm * 100.0 : 0.0;
      row.iter += hit->iter;
      ++counted;
    }
    if (!inputs.empty()) row.rank_threshold /= static_cast<double>(inputs.size());
    if (counted > 0) {
      row.hat_l1 /= counted;
      row.hat_l0 /= counted;
      row.p2_pct /= counted;
      row.iter /= counted;
    }
    row.instances = counted;
    rows.push_back(row);
  }
  return rows;
}

RankTable per_rank_min_norm(const TracesByMethod& traces, NormKind kind, double tol) {
  RankTable table;
  table.methods = method_names(traces);
  const size_t k = table.methods.size();
  for (const auto& [inst, by_method] : index_points(traces)) {
    // rank -> per-method minimum norm
    std::map<int, std::vector<double>> mins;
    for (size_t mi = 0; mi < k; ++mi) {
      auto it = by_method.find(table.methods[mi]);
      if (it == by_method.end()) continue;
      for (const auto& p : per_rank_minimum(it->second, kind)) {
        auto& v = mins[p.rank];
        if (v.empty()) v.assign(k, std::numeric_limits<double>::infinity());
        v[mi] = norm_of(p, kind);
      }
    }
    for (const auto& [rank, v] : mins) {
      const double best = *std::min_element(v.begin(), v.end());
      auto& row = table.rows[rank];
      if (row.empty()) row.resize(k);
      for (size_t mi = 0; mi < k; ++mi) {
        if (!std::isfinite(v[mi])) continue;
        ++row[mi].found;
        if (v[mi] <= best + tol) ++row[mi].best;
      }
    }
  }
  return table;
}

NondominatedTable table3a(const TracesByMethod& traces, NormKind kind, double tol) {
  NondominatedTable table;
  table.methods = method_names(traces);
  for (const auto& [inst, by_method] : index_points(traces)) {
    std::vector<int> counts(table.methods.size(), 0);
    for (size_t mi = 0; mi < table.methods.size(); ++mi) {
      auto it = by_method.find(table.methods[mi]);
      if (it == by_method.end()) continue;
      for (const auto& p : per_rank_minimum(it->second, kind)) {
        bool dominated = false;
        for (const auto& [other, pts] : by_method) {
          if (other == table.methods[mi]) continue;
          dominated = std::any_of(pts.begin(), pts.end(), [&](const ParetoPoint& q) {
            return dominates_tol(q, p, kind, tol);
          });
          if (dominated) break;
        }
        if (!dominated) ++counts[mi];
      }
    }
    table.rows[inst] = counts;
  }
  return table;
}

SummaryRow summarize(const std::string& method, const std::vector<const MethodTrace*>& traces) {
  SummaryRow row;
  row.method = method;
  for (const MethodTrace* t : traces) {
    if (t->records.empty()) continue;
    const TraceRecord& r = t->records.back();
    row.it += r.iter;
    row.l1 += r.l1;
    row.l0 += static_cast<double>(r.l0);
    row.rank += r.rank;
    ++row.traces;
    if (t->converged) ++row.converged;
  }
  if (row.traces > 0) {
    row.it /= row.traces;
    row.l1 /= row.traces;
    row.l0 /= row.traces;
    row.rank /= row.traces;
  }
  return row;
}

std::vector<CurvePoint> mean_curves(const std::vector<const MethodTrace*>& traces) {
  size_t len = 0;
  for (const MethodTrace* t : traces) len = std::max(len, t->records.size());
  std::vector<CurvePoint> out(len);
  for (size_t k = 0; k < len; ++k) {
    CurvePoint& c = out[k];
    c.iter = static_cast<int>(k);
    int used = 0;
    for (const MethodTrace* t : traces) {
      if (t->records.empty()) continue;
      // finished traces hold their last value
      const TraceRecord& r = t->records[std::min(k, t->records.size() - 1)];
      const TraceRecord& base = t->records.front();
      const double nm = static_cast<double>(t->final_h.size());
      c.hat_l1 += base.l1 > 0 ? (r.l1 - base.l1) / base.l1 * 100.0 : 0.0;
      c.p2_frob += r.p2_frob;
      c.rank += r.rank;
      c.p2_pct += nm > 0 ? static_cast<double>(r.p2_satisfied) / nm * 100.0 : 0.0;
      if (k < t->records.size()) ++c.traces;
      ++used;
    }
    if (used > 0) {
      c.hat_l1 /= used;
      c.p2_frob /= used;
      c.rank /= used;
      c.p2_pct /= used;
    }
  }
  return out;
}

void write_table1_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path) {
  auto out = open_csv(path, "method,it,l1,l0,rank");
  for (const auto& r : rows) {
    out << r.method << ',' << r.it << ',' << r.l1 << ',' << r.l0 << ',' << r.rank << '\n';
  }
  finish(out, path);
}

void write_table2_csv(const std::vector<AlphaRow>& rows, const std::filesystem::path& path) {
  auto out = open_csv(path, "method,alpha,rank_thr,hat_l1,hat_l0,p2_pct,it");
  for (const auto& r : rows) {
    out << r.method << ',' << r.alpha << ',' << r.rank_threshold << ',' << r.hat_l1 << ','
        << r.hat_l0 << ',' << r.p2_pct << ',' << r.iter << '\n';
  }
  finish(out, path);
}

void write_table3_csv(const RankTable& l1, const RankTable& l0, const std::filesystem::path& path) {
  auto out = open_csv(path, "rank,method,l1_found,l1_best,l0_found,l0_best");
  std::set<int, std::greater<int>> ranks;
  for (const auto& kv : l1.rows) ranks.insert(kv.first);
  for (const auto& kv : l0.rows) ranks.insert(kv.first);
  for (int rank : ranks) {
    for (size_t mi = 0; mi < l1.methods.size(); ++mi) {
      RankCell a, b;
      if (auto it = l1.rows.find(rank); it != l1.rows.end()) a = it->second[mi];
      if (auto it = l0.rows.find(rank); it != l0.rows.end() && mi < it->second.size()) {
        b = it->second[mi];
      }
      out << rank << ',' << l1.methods[mi] << ',' << a.found << ',' << a.best << ',' << b.found
          << ',' << b.best << '\n';
    }
  }
  finish(out, path);
}

void write_table3a_csv(const NondominatedTable& l1, const NondominatedTable& l0,
                       const std::filesystem::path& path) {
  auto out = open_csv(path, "instance,method,l1_nondominated,l0_nondominated");
  for (const auto& [inst, counts] : l1.rows) {
    const auto other = l0.rows.find(inst);
    for (size_t mi = 0; mi < l1.methods.size(); ++mi) {
      const int c0 = other != l0.rows.end() && mi < other->second.size() ? other->second[mi] : 0;
      out << inst << ',' << l1.methods[mi] << ',' << counts[mi] << ',' << c0 << '\n';
    }
  }
  finish(out, path);
}

void write_pareto_csv(const std::vector<ParetoPoint>& points, const std::filesystem::path& path) {
  auto out = open_csv(path, "iter,rank,l1,l0,method");
  for (const auto& p : points) {
    out << p.iter << ',' << p.rank << ',' << p.l1 << ',' << p.l0 << ',' << p.method << '\n';
  }
  finish(out, path);
}

void write_curves_csv(const std::vector<CurvePoint>& curve, const std::filesystem::path& path) {
  auto out = open_csv(path, "iter,hat_l1,p2_frob,rank,p2_pct,active");
  for (const auto& c : curve) {
    out << c.iter << ',' << c.hat_l1 << ',' << c.p2_frob << ',' << c.rank << ',' << c.p2_pct << ','
        << c.traces << '\n';
  }
  finish(out, path);
}

}  // namespace ginv
