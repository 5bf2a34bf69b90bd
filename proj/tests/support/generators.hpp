#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "flock/fields.hpp"
#include "flock/kernel.hpp"

// Small hand-rolled generators for the property tests. Every case is derived
// from a seed that is printed on failure, so a failing case can be replayed.
namespace flock::gen {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }
  // log-uniform, for positive scale parameters such as d
  double log_uniform(double a, double b) { return std::exp(uniform(std::log(a), std::log(b))); }
  std::uint64_t raw() { return rng_(); }

  double mu() { return uniform(-1.0, 1.0); }

  // A random kernel spec from one of the four registered models, positive on [-1,1].
  std::string kernel_spec() {
    switch (integer(0, 3)) {
      case 0: return "const:" + num(uniform(0.5, 2.0));
      case 1: {
        const double a = uniform(1.0, 2.0);
        return "affine:" + num(a) + "," + num(uniform(-0.5, 0.5) * a);
      }
      case 2: return "evenpoly:" + num(uniform(0.5, 1.5)) + "," + num(uniform(0.0, 1.0));
      default:
        return "table:-1@" + num(uniform(0.8, 1.6)) + ",0@" + num(uniform(0.8, 1.6)) + ",1@" +
               num(uniform(0.8, 1.6));
    }
  }

  CollisionKernel kernel(double d) { return parse_kernel_spec(kernel_spec(), d); }

  // Smooth kernels in the range where the spectral pipeline is converged at n = 64.
  double d() { return log_uniform(0.1, 5.0); }

  Vec3 unit_vector() {
    for (;;) {
      const Vec3 v{uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)};
      const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
      if (n > 0.1 && n <= 1.0) return {v[0] / n, v[1] / n, v[2] / n};
    }
  }

  std::vector<double> coefficients(int count, double scale = 1.0) {
    std::vector<double> c(static_cast<std::size_t>(count));
    for (auto& v : c) v = uniform(-scale, scale);
    return c;
  }

 private:
  static std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
  }

  std::mt19937_64 rng_;
};

// Seeds for a property run; FLOCK_PROPERTY_CASES overrides the count.
inline std::vector<std::uint64_t> seeds(int count, std::uint64_t base = 0x5eed) {
  if (const char* env = std::getenv("FLOCK_PROPERTY_CASES")) count = std::max(1, std::atoi(env));
  std::vector<std::uint64_t> out;
  for (int i = 0; i < count; ++i) out.push_back(base + 7919u * static_cast<std::uint64_t>(i));
  return out;
}

}  // namespace flock::gen
