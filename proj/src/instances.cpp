#include "ginv/instances.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "ginv/errors.hpp"

namespace ginv {

using nlohmann::json;

Vector prescribed_spectrum(int r, double big_m) {
  const double rho = std::pow(1.0 / big_m, 2.0 / (r + 1.0));
  Vector rc(r);
  for (int k = 0; k < r; ++k) rc(k) = big_m * std::pow(rho, k + 1);
  return rc;
}

std::string instance_id(int m, int n, int r, std::uint64_t seed) {
  return "m" + std::to_string(m) + "n" + std::to_string(n) + "r" + std::to_string(r) +
         "s" + std::to_string(seed);
}

Instance generate_instance(int m, int n, int r, double big_m, std::uint64_t seed) {
  if (m < 1 || n < 1) throw InvalidArgument("generate_instance: dimensions must be positive");
  if (r < 1 || r > std::min(m, n)) throw InvalidArgument("generate_instance: rank out of range");
  if (!(big_m > 0.0)) throw InvalidArgument("generate_instance: big_m must be positive");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian = [&](int rows, int cols) {
    Matrix g(rows, cols);
    for (int j = 0; j < cols; ++j) {
      for (int i = 0; i < rows; ++i) g(i, j) = normal(rng);
    }
    return g;
  };
  const Matrix u = orthogonal_factor(gaussian(m, m));
  const Matrix v = orthogonal_factor(gaussian(n, n));
  const Vector rc = prescribed_spectrum(r, big_m);

  Instance inst;
  inst.id = instance_id(m, n, r, seed);
  inst.m = m;
  inst.n = n;
  inst.r = r;
  inst.big_m = big_m;
  inst.seed = seed;
  inst.a = u.leftCols(r) * rc.asDiagonal() * v.leftCols(r).transpose();
  inst.a_pinv = pinv(inst.a);
  inst.sigma = Vector::Zero(std::min(m, n));
  inst.sigma.head(r) = rc;
  return inst;
}

Instance instance_from_matrix(std::string id, const Matrix& a) {
  Instance inst;
  inst.id = std::move(id);
  inst.m = static_cast<int>(a.rows());
  inst.n = static_cast<int>(a.cols());
  inst.a = a;
  inst.a_pinv = pinv(a);
  inst.sigma = singular_values(a);
  inst.r = numerical_rank(a);
  inst.big_m = inst.sigma.size() ? inst.sigma(0) : 0.0;
  return inst;
}

json instance_to_json(const Instance& inst) {
  std::vector<double> flat;
  flat.reserve(static_cast<size_t>(inst.a.size()));
  for (Eigen::Index i = 0; i < inst.a.rows(); ++i) {
    for (Eigen::Index j = 0; j < inst.a.cols(); ++j) flat.push_back(inst.a(i, j));
  }
  return json{{"id", inst.id},
              {"m", inst.m},
              {"n", inst.n},
              {"r", inst.r},
              {"big_m", inst.big_m},
              {"seed", inst.seed},
              {"a", flat},
              {"sigma", std::vector<double>(inst.sigma.data(),
                                            inst.sigma.data() + inst.sigma.size())}};
}

Instance instance_from_json(const json& j) {
  Instance inst;
  try {
    inst.id = j.at("id").get<std::string>();
    inst.m = j.at("m").get<int>();
    inst.n = j.at("n").get<int>();
    inst.r = j.at("r").get<int>();
    inst.big_m = j.at("big_m").get<double>();
    inst.seed = j.at("seed").get<std::uint64_t>();
    const auto flat = j.at("a").get<std::vector<double>>();
    const auto sigma = j.at("sigma").get<std::vector<double>>();
    if (inst.m < 1 || inst.n < 1) throw FormatError("instance: dimensions must be positive");
    if (flat.size() != static_cast<size_t>(inst.m) * static_cast<size_t>(inst.n)) {
      throw FormatError("instance: 'a' has " + std::to_string(flat.size()) +
                        " entries, expected m*n");
    }
    if (sigma.size() != static_cast<size_t>(std::min(inst.m, inst.n))) {
      throw FormatError("instance: 'sigma' must have min(m, n) entries");
    }
    inst.a.resize(inst.m, inst.n);
    for (int r = 0; r < inst.m; ++r) {
      for (int c = 0; c < inst.n; ++c) {
        inst.a(r, c) = flat[static_cast<size_t>(r) * static_cast<size_t>(inst.n) +
                            static_cast<size_t>(c)];
      }
    }
    inst.sigma = Eigen::Map<const Vector>(sigma.data(), static_cast<Eigen::Index>(sigma.size()));
  } catch (const json::exception& e) {
    throw FormatError(std::string("instance: ") + e.what());
  }
  if (!inst.a.allFinite()) throw FormatError("instance: non-finite entries in 'a'");
  const int rank = numerical_rank(inst.a);
  if (rank != inst.r) {
    throw ValidationError("instance " + inst.id + ": stored rank " + std::to_string(inst.r) +
                          " but numerical rank is " + std::to_string(rank));
  }
  inst.a_pinv = pinv(inst.a);
  return inst;
}

void save_instance(const Instance& inst, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << instance_to_json(inst).dump() << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Instance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return instance_from_json(j);
}

}  // namespace ginv
