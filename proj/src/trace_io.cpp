#include "ginv/trace_io.hpp"

#include <fstream>

#include "ginv/errors.hpp"

namespace ginv {

using nlohmann::json;

namespace {

json record_to_json(const TraceRecord& r) {
  json j{{"iter", r.iter},
         {"l1", r.l1},
         {"l0", r.l0},
         {"rank", r.rank},
         {"p2_satisfied", r.p2_satisfied},
         {"p2_frob", r.p2_frob},
         {"p2_max", r.p2_max},
         {"subproblem_obj", r.subproblem_obj},
         {"wall_ms", r.wall_ms},
         {"solver_iters", r.solver_iters},
         {"cuts_added", r.cuts_added},
         {"subproblem_inexact", r.subproblem_inexact}};
  j["mu"] = r.mu ? json(*r.mu) : json(nullptr);
  return j;
}

TraceRecord record_from_json(const json& j) {
  TraceRecord r;
  r.iter = j.at("iter").get<int>();
  r.l1 = j.at("l1").get<double>();
  r.l0 = j.at("l0").get<long>();
  r.rank = j.at("rank").get<int>();
  r.p2_satisfied = j.at("p2_satisfied").get<long>();
  r.p2_frob = j.at("p2_frob").get<double>();
  r.p2_max = j.value("p2_max", 0.0);
  if (j.contains("mu") && !j.at("mu").is_null()) r.mu = j.at("mu").get<double>();
  r.subproblem_obj = j.at("subproblem_obj").get<double>();
  r.wall_ms = j.at("wall_ms").get<double>();
  r.solver_iters = j.value("solver_iters", 0);
  r.cuts_added = j.value("cuts_added", 0);
  r.subproblem_inexact = j.value("subproblem_inexact", false);
  return r;
}

}  // namespace

json params_to_json(const MethodParams& p) {
  json j{{"mu0", p.mu0},
         {"mu_growth", p.mu_growth},
         {"t_fraction", p.t_fraction},
         {"max_iter", p.max_iter},
         {"p2_tol", p.p2_tol},
         {"reorder_mode", reorder_name(p.reorder_mode)}};
  j["seed"] = p.seed ? json(*p.seed) : json(nullptr);
  return j;
}

MethodParams params_from_json(const json& j, MethodParams base) {
  if (!j.is_object()) throw FormatError("params: expected an object");
  try {
    if (j.contains("mu0")) base.mu0 = j.at("mu0").get<double>();
    if (j.contains("mu_growth")) base.mu_growth = j.at("mu_growth").get<double>();
    if (j.contains("t_fraction")) base.t_fraction = j.at("t_fraction").get<double>();
    if (j.contains("max_iter")) base.max_iter = j.at("max_iter").get<int>();
    if (j.contains("p2_tol")) base.p2_tol = j.at("p2_tol").get<double>();
    if (j.contains("seed")) {
      if (j.at("seed").is_null()) {
        base.seed.reset();
      } else {
        base.seed = j.at("seed").get<std::uint64_t>();
      }
    }
    if (j.contains("reorder_mode")) {
      const auto mode = parse_reorder(j.at("reorder_mode").get<std::string>());
      if (!mode) throw FormatError("params: unknown reorder_mode");
      base.reorder_mode = *mode;
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("params: ") + e.what());
  }
  return base;
}

json trace_to_json(const MethodTrace& t) {
  json records = json::array();
  for (const auto& r : t.records) records.push_back(record_to_json(r));
  std::vector<double> flat;
  flat.reserve(static_cast<size_t>(t.final_h.size()));
  for (Eigen::Index i = 0; i < t.final_h.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.final_h.cols(); ++j) flat.push_back(t.final_h(i, j));
  }
  return json{{"method", method_name(t.method)},
              {"instance_id", t.instance_id},
              {"params", params_to_json(t.params)},
              {"records", records},
              {"converged", t.converged},
              {"termination", termination_name(t.termination)},
              {"message", t.message},
              {"n", t.final_h.rows()},
              {"m", t.final_h.cols()},
              {"a_rank", t.a_rank},
              {"run", t.run},
              {"permutation", t.permutation},
              {"final_h", flat}};
}

MethodTrace trace_from_json(const json& j) {
  MethodTrace t;
  try {
    const auto method = parse_method(j.at("method").get<std::string>());
    if (!method) throw FormatError("trace: unknown method");
    t.method = *method;
    t.instance_id = j.at("instance_id").get<std::string>();
    t.params = params_from_json(j.at("params"), MethodParams::defaults(t.method));
    for (const auto& r : j.at("records")) t.records.push_back(record_from_json(r));
    t.converged = j.at("converged").get<bool>();
    const std::string term = j.value("termination", std::string("max_iterations"));
    t.termination = term == "converged"        ? Termination::Converged
                    : term == "solver_failure" ? Termination::SolverFailure
                    : term == "reference"      ? Termination::Reference
                                               : Termination::MaxIterations;
    t.message = j.value("message", std::string());
    t.a_rank = j.value("a_rank", 0);
    t.run = j.value("run", 0);
    if (j.contains("permutation")) t.permutation = j.at("permutation").get<std::vector<int>>();
    const auto flat = j.at("final_h").get<std::vector<double>>();
    const long n = j.value("n", 0L);
    const long m = j.value("m", 0L);
    if (static_cast<size_t>(n * m) != flat.size()) {
      throw FormatError("trace: final_h has " + std::to_string(flat.size()) +
                        " entries, expected n*m");
    }
    t.final_h.resize(n, m);
    for (long i = 0; i < n; ++i) {
      for (long c = 0; c < m; ++c) t.final_h(i, c) = flat[static_cast<size_t>(i * m + c)];
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("trace: ") + e.what());
  }
  return t;
}

void save_traces(const std::vector<MethodTrace>& traces, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  if (traces.size() == 1 && traces[0].method != Method::CuttingPlaneRandom) {
    out << trace_to_json(traces[0]).dump() << '\n';
  } else {
    json arr = json::array();
    for (const auto& t : traces) arr.push_back(trace_to_json(t));
    out << arr.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<MethodTrace> load_traces(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  std::vector<MethodTrace> out;
  if (j.is_array()) {
    for (const auto& item : j) out.push_back(trace_from_json(item));
  } else {
    out.push_back(trace_from_json(j));
  }
  return out;
}

}  // namespace ginv
