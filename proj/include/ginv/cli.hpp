#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ginv/methods.hpp"

namespace ginv::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kSolverFailure = 2,
  kNonConvergence = 3,
  kIoError = 4,
  kIncompleteInputs = 5,
  kCheckFailed = 6,
};

struct RunConfig {
  double rank_tol = 1e-5;
  double zero_tol = 1e-6;
  double p2_tol = 1e-6;
  IpmOptions ipm;
  SplittingOptions admm;
  // Per-method MethodParams fields, keyed by cli method name.
  std::map<std::string, nlohmann::json> overrides;
  int parallelism = 1;
  int cp_random_runs = 20;

  void validate() const;  // throws InvalidArgument
};

// {"tolerances": {rank_tol, zero_tol, p2_tol},
//  "solver": {ipm_tol, max_ipm_iter, admm_tol, admm_max_iter},
//  "methods": {"<name>": {mu0, mu_growth, t_fraction, max_iter, p2_tol, seed}},
//  "parallelism": k, "cp_random_runs": k}
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

MethodConfig method_config(const RunConfig& cfg, Method m);

// Iterative methods in report order, then the reference points.
const std::vector<Method>& all_methods();

// Instance files named by a path: the file itself, or every *.json in a
// directory other than manifest.json, sorted by name.
std::vector<std::filesystem::path> instance_files(const std::filesystem::path& path);

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace ginv::cli
