#pragma once

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "ginv/methods.hpp"

namespace ginv {

// {method, instance_id, params, records, converged, termination, message,
//  n, m, a_rank, run, permutation, final_h (row-major)}
nlohmann::json trace_to_json(const MethodTrace& trace);
MethodTrace trace_from_json(const nlohmann::json& j);  // throws FormatError

nlohmann::json params_to_json(const MethodParams& p);
// Fields missing from j keep their value in base.
MethodParams params_from_json(const nlohmann::json& j, MethodParams base);

// A trace file holds one trace object or an array of them (cp-random).
void save_traces(const std::vector<MethodTrace>& traces, const std::filesystem::path& path);
std::vector<MethodTrace> load_traces(const std::filesystem::path& path);

}  // namespace ginv
