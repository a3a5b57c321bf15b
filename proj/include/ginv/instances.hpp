#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "ginv/dense.hpp"

namespace ginv {

struct Instance {
  std::string id;
  int m = 0;
  int n = 0;
  int r = 0;
  double big_m = 0.0;
  std::uint64_t seed = 0;
  Matrix a;
  Matrix a_pinv;
  Vector sigma;  // min(m, n) values
};

// A = U diag(rc) V' with U, V Haar-distributed orthogonal factors drawn from
// the seed, and rc_k = big_m * rho^k (k = 1..r), rho = (1/big_m)^(2/(r+1)).
Instance generate_instance(int m, int n, int r, double big_m, std::uint64_t seed);

// The prescribed nonzero singular values for (r, big_m).
Vector prescribed_spectrum(int r, double big_m);

// Wraps an explicit matrix; r is its numerical rank.
Instance instance_from_matrix(std::string id, const Matrix& a);

std::string instance_id(int m, int n, int r, std::uint64_t seed);

nlohmann::json instance_to_json(const Instance& inst);
// Throws FormatError on schema mismatch and ValidationError if the stored
// rank disagrees with the numerical rank of a.
Instance instance_from_json(const nlohmann::json& j);

void save_instance(const Instance& inst, const std::filesystem::path& path);
Instance load_instance(const std::filesystem::path& path);

}  // namespace ginv
