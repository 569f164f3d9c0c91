#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace corral {

/// Seeded generator. Components derive independent named streams from a run
/// seed so that adding draws in one component never shifts another.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  static Rng stream(std::uint64_t seed, std::string_view name);
  static Rng stream(std::uint64_t seed, std::string_view name, std::uint64_t index);

  /// Uniform double in [0, 1) built from the top 53 bits of one draw.
  double uniform();
  std::size_t uniform_index(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }
  double beta(double a, double b);

  std::mt19937_64& engine() noexcept { return engine_; }

  bool operator==(const Rng&) const = default;

 private:
  std::mt19937_64 engine_;
};

}  // namespace corral
