#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace shla {

/// Additive-recurrence (Weyl) low-discrepancy sequence on the unit cube.
/// Fully deterministic: the same dimension always yields the same stream.
class WeylSampler {
public:
  explicit WeylSampler(int dim, std::uint64_t skip = 0) : dim_(dim), n_(skip) {
    static const int primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                                 31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
    alphas_.reserve(dim);
    for (int d = 0; d < dim; ++d) {
      double a = std::sqrt(static_cast<double>(primes[d % 20] + 100 * (d / 20)));
      alphas_.push_back(a - std::floor(a));
    }
  }

  std::vector<double> next() {
    ++n_;
    std::vector<double> x(dim_);
    for (int d = 0; d < dim_; ++d) {
      double v = 0.5 + n_ * alphas_[d];
      x[d] = v - std::floor(v);
    }
    return x;
  }

private:
  int dim_;
  std::uint64_t n_;
  std::vector<double> alphas_;
};

/// Default seed for every randomized suite; the CLI overrides it from
/// SHLA_SEED.
inline std::uint64_t& global_seed() {
  static std::uint64_t seed = 7;
  return seed;
}

inline std::mt19937_64 make_rng(std::uint64_t salt) {
  return std::mt19937_64(global_seed() * 0x9e3779b97f4a7c15ULL + salt);
}

}  // namespace shla
