#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

namespace mfp {

std::uint64_t splitmix64(std::uint64_t x);

// Seed splitting. Every random stream in the toolkit is derived from a root
// seed and a path of integers naming the consumer:
//   s0 = splitmix64(root); s_{i+1} = splitmix64(s_i ^ splitmix64(path_i + i + 1))
// Distinct paths give statistically independent streams; the scheme is
// documented in the README so runs can be audited by hand.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path);

// FNV-1a, used to turn string identifiers into stream ids.
std::uint64_t hash_string(std::string_view s);
std::uint64_t hash_doubles(const double* data, std::size_t n, std::uint64_t basis = 0);

// mt19937_64 engine with hand-written distributions. The standard library's
// distributions are implementation-defined; these are not, so datasets and
// models are bit-identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  // Standard normal via Box-Muller (one variate per call).
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

  // k distinct indices from [0, n) in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

}  // namespace mfp
