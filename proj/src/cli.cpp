#include "ginv/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "ginv/analysis.hpp"
#include "ginv/errors.hpp"
#include "ginv/formulations.hpp"
#include "ginv/instances.hpp"
#include "ginv/trace_io.hpp"

namespace ginv::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Thrown inside subcommands to leave with a specific exit code.
struct Exit {
  int code;
  std::string message;
};

template <typename T>
void read_field(const json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Exit{kIoError, "cannot open " + path.string()};
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Exit{kIoError, path.string() + ": " + e.what()};
  }
}

// Flag overrides shared by all selected methods.
struct ParamFlags {
  std::optional<double> mu0;
  std::optional<double> mu_growth;
  std::optional<double> t_fraction;
  std::optional<int> max_iter;
  std::optional<std::uint64_t> seed;
  std::optional<double> p2_tol;
  std::optional<double> ipm_tol;
  std::optional<int> max_ipm_iter;
  std::optional<double> admm_tol;
  std::optional<int> admm_max_iter;
  std::optional<int> runs;
  std::optional<int> threads;

  void apply(RunConfig& cfg) const {
    if (p2_tol) cfg.p2_tol = *p2_tol;
    if (ipm_tol) cfg.ipm.tol = *ipm_tol;
    if (max_ipm_iter) cfg.ipm.max_iter = *max_ipm_iter;
    if (admm_tol) cfg.admm.tol = *admm_tol;
    if (admm_max_iter) cfg.admm.max_iter = *admm_max_iter;
    if (runs) cfg.cp_random_runs = *runs;
    if (threads) cfg.parallelism = *threads;
  }

  void apply(MethodParams& p) const {
    if (mu0) p.mu0 = *mu0;
    if (mu_growth) p.mu_growth = *mu_growth;
    if (t_fraction) p.t_fraction = *t_fraction;
    if (max_iter) p.max_iter = *max_iter;
    if (seed) p.seed = *seed;
  }
};

bool is_reference(Method m) { return m == Method::P13 || m == Method::P123 || m == Method::Pinv; }

std::string trace_file_name(const std::string& instance_id, Method m) {
  return instance_id + "__" + method_name(m) + ".json";
}

// ---------------------------------------------------------------- gen

int cmd_gen(int m, int n, int rank, int count, std::uint64_t seed, double big_m,
            const fs::path& out_dir, std::ostream& out) {
  if (m < 1 || n < 1) throw Exit{kUsage, "--m and --n must be positive"};
  if (rank < 1 || rank > std::min(m, n)) {
    throw Exit{kUsage, "--rank must lie in [1, min(m, n)]"};
  }
  if (count < 1) throw Exit{kUsage, "--count must be at least 1"};
  if (!(big_m > 0.0)) throw Exit{kUsage, "--big-m must be positive"};
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Exit{kIoError, "cannot create " + out_dir.string() + ": " + ec.message()};

  json manifest{{"m", m}, {"n", n}, {"r", rank}, {"big_m", big_m}, {"seed", seed},
                {"count", count}, {"instances", json::array()}};
  for (int k = 0; k < count; ++k) {
    const Instance inst = generate_instance(m, n, rank, big_m, seed + static_cast<std::uint64_t>(k));
    const std::string file = inst.id + ".json";
    try {
      save_instance(inst, out_dir / file);
    } catch (const std::runtime_error& e) {
      throw Exit{kIoError, e.what()};
    }
    manifest["instances"].push_back({{"id", inst.id}, {"file", file}});
    out << "wrote " << (out_dir / file).string() << '\n';
  }
  std::ofstream mf(out_dir / "manifest.json");
  mf << manifest.dump(2) << '\n';
  if (!mf) throw Exit{kIoError, "cannot write manifest.json"};
  return kOk;
}

// ---------------------------------------------------------------- run

struct Job {
  size_t instance = 0;
  Method method = Method::CuttingPlane;
};

struct JobResult {
  int code = kOk;
  std::string log;
};

int env_threads() {
  const char* v = std::getenv("GINV_THREADS");
  if (v == nullptr || *v == '\0') return 0;
  try {
    const int k = std::stoi(v);
    if (k < 1) throw Exit{kUsage, "GINV_THREADS must be a positive integer"};
    return k;
  } catch (const std::logic_error&) {
    throw Exit{kUsage, "GINV_THREADS must be a positive integer"};
  }
}

std::vector<Method> parse_method_list(const std::string& list) {
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (item == "all") {
      for (Method m : all_methods()) out.push_back(m);
      continue;
    }
    const auto m = parse_method(item);
    if (!m) throw Exit{kUsage, "unknown method '" + item + "'"};
    out.push_back(*m);
  }
  if (out.empty()) throw Exit{kUsage, "--method needs at least one method"};
  std::vector<Method> unique;
  for (Method m : out) {
    if (std::find(unique.begin(), unique.end(), m) == unique.end()) unique.push_back(m);
  }
  return unique;
}

std::string describe(const MethodTrace& t) {
  std::ostringstream os;
  os << t.instance_id << ' ' << method_name(t.method);
  if (t.method == Method::CuttingPlaneRandom) os << '#' << t.run;
  os << ": " << termination_name(t.termination);
  if (!t.records.empty()) {
    const TraceRecord& r = t.records.back();
    double ms = 0.0;
    for (const auto& x : t.records) ms += x.wall_ms;
    os << " it=" << r.iter << " l1=" << std::setprecision(8) << r.l1 << " l0=" << r.l0
       << " rank=" << r.rank << " (" << std::setprecision(4) << ms << " ms)";
  }
  if (!t.message.empty()) os << " [" << t.message << ']';
  return os.str();
}

int trace_code(const MethodTrace& t) {
  if (t.termination == Termination::SolverFailure) return kSolverFailure;
  if (is_reference(t.method)) return kOk;
  return t.converged ? kOk : kNonConvergence;
}

// Solver failure outranks nonconvergence.
int combine(int a, int b) {
  auto severity = [](int c) { return c == kSolverFailure ? 2 : c == kNonConvergence ? 1 : 0; };
  return severity(a) >= severity(b) ? a : b;
}

int cmd_run(const std::string& methods_arg, const fs::path& instance_path,
            const std::optional<fs::path>& config_path, const fs::path& out_dir,
            const ParamFlags& flags, std::ostream& out, std::ostream& err) {
  const std::vector<Method> methods = parse_method_list(methods_arg);
  RunConfig cfg;
  if (config_path) {
    try {
      cfg = load_run_config(*config_path);
    } catch (const FormatError& e) {
      throw Exit{kUsage, e.what()};
    } catch (const std::runtime_error& e) {
      throw Exit{kIoError, e.what()};
    }
  }
  if (const int k = env_threads(); k > 0) cfg.parallelism = k;
  flags.apply(cfg);
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw Exit{kUsage, e.what()};
  }

  std::vector<fs::path> files;
  try {
    files = instance_files(instance_path);
  } catch (const std::runtime_error& e) {
    throw Exit{kIoError, e.what()};
  }
  std::vector<Instance> instances;
  for (const auto& file : files) {
    try {
      instances.push_back(load_instance(file));
    } catch (const std::runtime_error& e) {
      throw Exit{kIoError, e.what()};
    }
  }
  if (instances.empty()) throw Exit{kIncompleteInputs, "no instances at " + instance_path.string()};

  std::map<Method, MethodConfig> configs;
  for (Method m : methods) {
    MethodConfig mc = method_config(cfg, m);
    flags.apply(mc.params);
    try {
      mc.params.validate();
    } catch (const InvalidArgument& e) {
      throw Exit{kUsage, method_name(m) + ": " + e.what()};
    }
    configs[m] = mc;
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Exit{kIoError, "cannot create " + out_dir.string() + ": " + ec.message()};

  std::vector<Job> jobs;
  for (size_t i = 0; i < instances.size(); ++i) {
    for (Method m : methods) jobs.push_back(Job{i, m});
  }

  // z_P123 per instance, computed once on demand for the Lagrangian runs.
  std::vector<std::optional<double>> z_cache(instances.size());
  std::vector<std::mutex> z_locks(instances.size());
  auto z_p123 = [&](size_t i) {
    std::lock_guard<std::mutex> lock(z_locks[i]);
    if (!z_cache[i]) z_cache[i] = solve_z_p123(instances[i], cfg.ipm);
    return *z_cache[i];
  };

  std::vector<JobResult> results(jobs.size());
  std::mutex log_lock;
  auto run_job = [&](size_t idx) {
    const Job& job = jobs[idx];
    const Instance& inst = instances[job.instance];
    const MethodConfig& mc = configs.at(job.method);
    JobResult res;
    std::vector<MethodTrace> traces;
    try {
      switch (job.method) {
        case Method::CuttingPlane: traces.push_back(cutting_plane(inst, mc)); break;
        case Method::CuttingPlaneRandom: {
          MethodConfig seeded = mc;
          if (!seeded.params.seed) seeded.params.seed = inst.seed;
          traces = cutting_plane_random(inst, seeded, cfg.cp_random_runs);
          break;
        }
        case Method::AugmentedLagrangian: traces.push_back(augmented_lagrangian(inst, mc)); break;
        case Method::Lagrangian:
          traces.push_back(lagrangian_subgradient(inst, z_p123(job.instance), mc));
          break;
        case Method::PenaltyL1: traces.push_back(penalty_l1(inst, mc)); break;
        case Method::PenaltyFrobenius: traces.push_back(penalty_frobenius(inst, mc)); break;
        case Method::NuclearNorm: traces.push_back(nuclear_norm_method(inst, mc)); break;
        case Method::P13:
        case Method::P123:
        case Method::Pinv: traces.push_back(reference_trace(inst, job.method, mc)); break;
      }
    } catch (const SolverFailure& e) {
      res.code = kSolverFailure;
      res.log = inst.id + ' ' + method_name(job.method) + ": solver_failure [" + e.what() + ']';
    }
    for (const auto& t : traces) {
      res.code = combine(res.code, trace_code(t));
      res.log += (res.log.empty() ? "" : "\n") + describe(t);
    }
    if (!traces.empty()) {
      const fs::path file = out_dir / trace_file_name(inst.id, job.method);
      try {
        save_traces(traces, file);
      } catch (const std::runtime_error& e) {
        res.code = kIoError;
        res.log += std::string("\n") + e.what();
      }
    }
    {
      std::lock_guard<std::mutex> lock(log_lock);
      err << res.log << '\n';
    }
    results[idx] = std::move(res);
  };

  const size_t workers = std::min(static_cast<size_t>(cfg.parallelism), jobs.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t idx = next++; idx < jobs.size(); idx = next++) run_job(idx);
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  int code = kOk;
  bool io_failed = false;
  for (const auto& r : results) {
    if (r.code == kIoError) io_failed = true;
    code = combine(code, r.code);
  }
  out << "wrote " << jobs.size() << " trace file(s) to " << out_dir.string() << '\n';
  return io_failed ? kIoError : code;
}

// ---------------------------------------------------------------- report

struct TraceStore {
  std::vector<std::unique_ptr<MethodTrace>> owned;
  std::map<std::string, std::vector<const MethodTrace*>> by_method;
  std::set<std::string> instances;
};

TraceStore load_trace_dir(const fs::path& dir) {
  TraceStore store;
  if (!fs::is_directory(dir)) throw Exit{kIoError, dir.string() + " is not a directory"};
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::vector<MethodTrace> traces;
    try {
      traces = load_traces(f);
    } catch (const FormatError& e) {
      throw Exit{kIoError, e.what()};
    } catch (const std::runtime_error& e) {
      throw Exit{kIoError, e.what()};
    }
    for (auto& t : traces) {
      store.owned.push_back(std::make_unique<MethodTrace>(std::move(t)));
      const MethodTrace* p = store.owned.back().get();
      store.by_method[method_name(p->method)].push_back(p);
      store.instances.insert(p->instance_id);
    }
  }
  return store;
}

// Methods (by name) that are present, in the given order.
std::vector<std::string> present(const TraceStore& s, const std::vector<Method>& wanted) {
  std::vector<std::string> out;
  for (Method m : wanted) {
    if (s.by_method.count(method_name(m))) out.push_back(method_name(m));
  }
  return out;
}

void require_complete(const TraceStore& s, const std::vector<std::string>& methods,
                      const std::string& style) {
  if (methods.empty()) throw Exit{kIncompleteInputs, style + ": no usable traces"};
  std::set<std::string> covered;
  for (const auto& m : methods) {
    for (const MethodTrace* t : s.by_method.at(m)) covered.insert(t->instance_id);
  }
  for (const auto& m : methods) {
    std::set<std::string> mine;
    for (const MethodTrace* t : s.by_method.at(m)) mine.insert(t->instance_id);
    for (const auto& inst : covered) {
      if (!mine.count(inst)) {
        throw Exit{kIncompleteInputs, style + ": no " + m + " trace for instance " + inst};
      }
    }
  }
}

const std::vector<Method>& table2_methods() {
  static const std::vector<Method> v{Method::CuttingPlane, Method::AugmentedLagrangian,
                                     Method::PenaltyL1, Method::PenaltyFrobenius,
                                     Method::NuclearNorm};
  return v;
}

const std::vector<Method>& compare_methods() {
  static const std::vector<Method> v{Method::NuclearNorm, Method::PenaltyL1, Method::CuttingPlane,
                                     Method::CuttingPlaneRandom};
  return v;
}

TracesByMethod select(const TraceStore& s, const std::vector<std::string>& methods) {
  TracesByMethod out;
  for (const auto& m : methods) out[m] = s.by_method.at(m);
  return out;
}

void report_table1(const TraceStore& s, const fs::path& out) {
  std::vector<Method> order{Method::Pinv, Method::P13, Method::P123};
  for (Method m : all_methods()) {
    if (!is_reference(m)) order.push_back(m);
  }
  const auto methods = present(s, order);
  require_complete(s, methods, "table1");
  std::vector<SummaryRow> rows;
  for (const auto& m : methods) rows.push_back(summarize(m, s.by_method.at(m)));
  write_table1_csv(rows, out / "table1.csv");
}

void report_table2(const TraceStore& s, const fs::path& out) {
  const auto methods = present(s, table2_methods());
  require_complete(s, methods, "table2");
  std::map<std::string, int> rank_h123;
  if (s.by_method.count("p123")) {
    for (const MethodTrace* t : s.by_method.at("p123")) {
      if (!t->records.empty()) rank_h123[t->instance_id] = t->records.back().rank;
    }
  }
  std::vector<AlphaRow> rows;
  for (const auto& m : methods) {
    std::vector<AlphaInput> inputs;
    for (const MethodTrace* t : s.by_method.at(m)) {
      if (t->records.empty()) continue;
      const auto it = rank_h123.find(t->instance_id);
      inputs.push_back(AlphaInput{t, t->records.front().rank,
                                  it != rank_h123.end() ? it->second : t->a_rank});
    }
    const auto part = alpha_table(m, inputs);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  write_table2_csv(rows, out / "table2.csv");
}

void report_table3(const TraceStore& s, const fs::path& out, bool nondominated) {
  const auto methods = present(s, compare_methods());
  require_complete(s, methods, nondominated ? "table3a" : "table3");
  const TracesByMethod t = select(s, methods);
  if (nondominated) {
    write_table3a_csv(table3a(t, NormKind::L1), table3a(t, NormKind::L0), out / "table3a.csv");
  } else {
    write_table3_csv(per_rank_min_norm(t, NormKind::L1), per_rank_min_norm(t, NormKind::L0),
                     out / "table3.csv");
  }
}

void report_pareto(const TraceStore& s, const fs::path& out) {
  const auto methods = present(s, compare_methods());
  require_complete(s, methods, "pareto");
  for (const auto& inst : s.instances) {
    std::vector<ParetoPoint> points;
    for (const auto& m : methods) {
      std::vector<ParetoPoint> mine;
      for (const MethodTrace* t : s.by_method.at(m)) {
        if (t->instance_id != inst) continue;
        const auto pts = trace_points(*t, m);
        mine.insert(mine.end(), pts.begin(), pts.end());
      }
      // Random runs are summarized by their best iterate per rank.
      if (m == method_name(Method::CuttingPlaneRandom)) mine = per_rank_minimum(mine);
      points.insert(points.end(), mine.begin(), mine.end());
    }
    write_pareto_csv(points, out / ("pareto_" + inst + ".csv"));
  }
}

void report_curves(const TraceStore& s, const fs::path& out) {
  std::vector<Method> iterative;
  for (Method m : all_methods()) {
    if (!is_reference(m)) iterative.push_back(m);
  }
  const auto methods = present(s, iterative);
  if (methods.empty()) throw Exit{kIncompleteInputs, "curves: no iterative traces"};
  for (const auto& m : methods) {
    write_curves_csv(mean_curves(s.by_method.at(m)), out / ("curves_" + m + ".csv"));
  }
}

int cmd_report(const fs::path& traces_dir, const std::string& style, const fs::path& out_dir,
               std::ostream& out) {
  static const std::set<std::string> styles{"table1", "table2", "table3", "table3a",
                                            "pareto", "curves", "all"};
  if (!styles.count(style)) throw Exit{kUsage, "unknown --style '" + style + "'"};
  const TraceStore store = load_trace_dir(traces_dir);
  if (store.owned.empty()) throw Exit{kIncompleteInputs, "no traces in " + traces_dir.string()};
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Exit{kIoError, "cannot create " + out_dir.string() + ": " + ec.message()};
  try {
    const bool all = style == "all";
    if (all || style == "table1") report_table1(store, out_dir);
    if (all || style == "table2") report_table2(store, out_dir);
    if (all || style == "table3") report_table3(store, out_dir, false);
    if (all || style == "table3a") report_table3(store, out_dir, true);
    if (all || style == "pareto") report_pareto(store, out_dir);
    if (all || style == "curves") report_curves(store, out_dir);
  } catch (const std::runtime_error& e) {
    throw Exit{kIoError, e.what()};
  }
  out << "report " << style << " written to " << out_dir.string() << '\n';
  return kOk;
}

// ---------------------------------------------------------------- check

Matrix load_h(const fs::path& path) {
  const json j = load_json_file(path);
  try {
    if (j.is_array()) {
      if (!j.empty() && j.front().is_object()) return trace_from_json(j.front()).final_h;
      const size_t rows = j.size();
      const size_t cols = rows ? j.front().size() : 0;
      Matrix h(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
      for (size_t r = 0; r < rows; ++r) {
        if (j[r].size() != cols) throw FormatError("ragged matrix");
        for (size_t c = 0; c < cols; ++c) {
          h(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
        }
      }
      return h;
    }
    if (j.contains("final_h")) return trace_from_json(j).final_h;
    const long n = j.at("n").get<long>();
    const long m = j.at("m").get<long>();
    const auto flat = j.at("h").get<std::vector<double>>();
    if (static_cast<size_t>(n * m) != flat.size()) throw FormatError("'h' must have n*m entries");
    Matrix h(n, m);
    for (long r = 0; r < n; ++r) {
      for (long c = 0; c < m; ++c) h(r, c) = flat[static_cast<size_t>(r * m + c)];
    }
    return h;
  } catch (const json::exception& e) {
    throw Exit{kIoError, path.string() + ": " + e.what()};
  } catch (const FormatError& e) {
    throw Exit{kIoError, path.string() + ": " + e.what()};
  }
}

int cmd_check(const fs::path& instance_path, const fs::path& h_path, double p2_tol,
              std::ostream& out) {
  Instance inst;
  try {
    inst = load_instance(instance_path);
  } catch (const std::runtime_error& e) {
    throw Exit{kIoError, e.what()};
  }
  const Matrix h = load_h(h_path);
  if (h.rows() != inst.a.cols() || h.cols() != inst.a.rows()) {
    throw Exit{kUsage, "H must be " + std::to_string(inst.n) + " x " + std::to_string(inst.m)};
  }
  if (!h.allFinite()) throw Exit{kIoError, "H has non-finite entries"};
  const PenroseResiduals res = penrose_residuals(inst.a, h);
  const double p2lin = max_abs(p2_residual(h, inst.a, inst.a_pinv));
  const MatrixNorms norms = matrix_norms(h);
  const bool ok = res.p1 <= p2_tol && res.p3 <= p2_tol;
  out << std::scientific << std::setprecision(3);
  out << "P1 |AHA - A|_max       " << res.p1 << '\n'
      << "P2 |HAH - H|_max       " << res.p2 << '\n'
      << "P3 |AH - (AH)'|_max    " << res.p3 << '\n'
      << "P4 |HA - (HA)'|_max    " << res.p4 << '\n'
      << "p2lin |HAA^+ - H|_max  " << p2lin << '\n';
  out << std::defaultfloat << std::setprecision(10);
  out << "rank " << numerical_rank(h) << " (A: " << numerical_rank(inst.a) << ")\n"
      << "l1 " << norms.l1 << "  l0 " << norms.l0 << "  frob " << norms.frob << "  nuclear "
      << norms.nuclear << '\n'
      << (ok ? "ah-symmetric generalized inverse: yes" : "ah-symmetric generalized inverse: no")
      << '\n';
  return ok ? kOk : kCheckFailed;
}

}  // namespace

void RunConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw InvalidArgument(std::string(name) + " must be positive");
  };
  positive(rank_tol, "rank_tol");
  positive(zero_tol, "zero_tol");
  positive(p2_tol, "p2_tol");
  positive(ipm.tol, "ipm_tol");
  positive(admm.tol, "admm_tol");
  if (ipm.max_iter < 1) throw InvalidArgument("max_ipm_iter must be at least 1");
  if (admm.max_iter < 1) throw InvalidArgument("admm_max_iter must be at least 1");
  if (parallelism < 1) throw InvalidArgument("parallelism must be at least 1");
  if (cp_random_runs < 1) throw InvalidArgument("cp_random_runs must be at least 1");
}

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  if (!j.is_object()) throw FormatError("config: expected an object");
  for (const char* section : {"tolerances", "solver", "methods"}) {
    if (j.contains(section) && !j.at(section).is_object()) {
      throw FormatError(std::string("config: '") + section + "' must be an object");
    }
  }
  try {
    if (j.contains("tolerances")) {
      const json& t = j.at("tolerances");
      read_field(t, "rank_tol", cfg.rank_tol);
      read_field(t, "zero_tol", cfg.zero_tol);
      read_field(t, "p2_tol", cfg.p2_tol);
    }
    if (j.contains("solver")) {
      const json& s = j.at("solver");
      read_field(s, "ipm_tol", cfg.ipm.tol);
      read_field(s, "max_ipm_iter", cfg.ipm.max_iter);
      read_field(s, "admm_tol", cfg.admm.tol);
      read_field(s, "admm_max_iter", cfg.admm.max_iter);
    }
    if (j.contains("methods")) {
      for (const auto& [name, params] : j.at("methods").items()) {
        if (!parse_method(name)) throw FormatError("config: unknown method '" + name + "'");
        cfg.overrides[name] = params;
      }
    }
    read_field(j, "parallelism", cfg.parallelism);
    read_field(j, "cp_random_runs", cfg.cp_random_runs);
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

MethodConfig method_config(const RunConfig& cfg, Method m) {
  MethodConfig mc;
  mc.params = MethodParams::defaults(m);
  mc.params.p2_tol = cfg.p2_tol;
  if (auto it = cfg.overrides.find(method_name(m)); it != cfg.overrides.end()) {
    mc.params = params_from_json(it->second, mc.params);
  }
  mc.rank_tol = cfg.rank_tol;
  mc.zero_tol = cfg.zero_tol;
  mc.ipm = cfg.ipm;
  mc.admm = cfg.admm;
  return mc;
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> v{
      Method::CuttingPlane, Method::CuttingPlaneRandom, Method::AugmentedLagrangian,
      Method::Lagrangian,   Method::PenaltyL1,          Method::PenaltyFrobenius,
      Method::NuclearNorm,  Method::P13,                Method::P123,
      Method::Pinv};
  return v;
}

std::vector<fs::path> instance_files(const fs::path& path) {
  std::vector<fs::path> out;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_regular_file() && e.path().extension() == ".json" &&
          e.path().filename() != "manifest.json") {
        out.push_back(e.path());
      }
    }
    std::sort(out.begin(), out.end());
  } else if (fs::exists(path)) {
    out.push_back(path);
  } else {
    throw std::runtime_error("no such file or directory: " + path.string());
  }
  return out;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"ah-symmetric generalized inverses: generate, run, report, check"};
  app.require_subcommand(1);

  int gm = 0, gn = 0, grank = 0, gcount = 1;
  std::uint64_t gseed = 1;
  double gbig_m = 2.0;
  std::string gout;
  auto* gen = app.add_subcommand("gen", "generate random instances");
  gen->add_option("--m", gm, "rows")->required();
  gen->add_option("--n", gn, "columns")->required();
  gen->add_option("--rank", grank, "target rank")->required();
  gen->add_option("--count", gcount, "number of instances");
  gen->add_option("--seed", gseed, "first seed");
  gen->add_option("--big-m", gbig_m, "largest singular value");
  gen->add_option("--out-dir", gout, "output directory")->required();

  std::string rmethod, rinstance, rout;
  std::optional<std::string> rconfig;
  ParamFlags flags;
  auto* run = app.add_subcommand("run", "run methods on instances");
  run->add_option("--method", rmethod, "comma-separated methods or 'all'")->required();
  run->add_option("--instance", rinstance, "instance file or directory")->required();
  run->add_option("--config", rconfig, "JSON run configuration");
  run->add_option("--out", rout, "trace output directory")->required();
  run->add_option("--mu0", flags.mu0);
  run->add_option("--mu-growth", flags.mu_growth);
  run->add_option("--t-fraction", flags.t_fraction);
  run->add_option("--max-iter", flags.max_iter);
  run->add_option("--seed", flags.seed, "seed for cp-random");
  run->add_option("--p2-tol", flags.p2_tol);
  run->add_option("--ipm-tol", flags.ipm_tol);
  run->add_option("--max-ipm-iter", flags.max_ipm_iter);
  run->add_option("--admm-tol", flags.admm_tol);
  run->add_option("--admm-max-iter", flags.admm_max_iter);
  run->add_option("--runs", flags.runs, "cp-random runs");
  run->add_option("--threads", flags.threads, "worker threads");

  std::string ptraces, pstyle, pout;
  auto* report = app.add_subcommand("report", "tabulate traces");
  report->add_option("--traces", ptraces, "trace directory")->required();
  report->add_option("--style", pstyle,
                     "table1 | table2 | table3 | table3a | pareto | curves | all")
      ->required();
  report->add_option("--out", pout, "output directory")->required();

  std::string cinstance, ch;
  double ctol = 1e-6;
  auto* check = app.add_subcommand("check", "check Penrose properties of a candidate H");
  check->set_help_flag("--help", "print this help message and exit");  // frees --h
  check->add_option("--instance", cinstance, "instance file")->required();
  check->add_option("--h", ch, "H as a trace, {n, m, h} or nested array")->required();
  check->add_option("--p2-tol", ctol, "tolerance for P1 and P3");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_gen(gm, gn, grank, gcount, gseed, gbig_m, gout, out);
    if (*run) {
      return cmd_run(rmethod, rinstance,
                     rconfig ? std::optional<fs::path>(*rconfig) : std::nullopt, rout, flags, out,
                     err);
    }
    if (*report) return cmd_report(ptraces, pstyle, pout, out);
    if (*check) return cmd_check(cinstance, ch, ctol, out);
  } catch (const Exit& e) {
    err << "error: " << e.message << '\n';
    return e.code;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const SolverFailure& e) {
    err << "error: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const NonConvergence& e) {
    err << "error: " << e.what() << '\n';
    return kSolverFailure;
  }
  return kUsage;
}

}  // namespace ginv::cli
