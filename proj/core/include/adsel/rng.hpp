#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace adsel {

// Seeded random stream. The engine is std::mt19937_64, whose output sequence is
// fixed by the standard; the distributions are implemented here because the
// standard library ones are implementation-defined. Child streams are derived
// from (seed, stage name) only, so adding draws to one stage never perturbs
// another.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64+splitmix64/v1";

  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  Rng split(std::string_view stage) const;

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal(double mean = 0.0, double stddev = 1.0);
  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer on [0, n). n must be nonzero.
  std::uint64_t below(std::uint64_t n);

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace adsel
