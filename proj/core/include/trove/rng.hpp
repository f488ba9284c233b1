#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace trove {

// Seeded random stream. The engine is std::mt19937_64, whose output sequence
// is fixed by the standard; the distribution mappings below are written out
// here because the std:: distributions differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent stream keyed by a label (object id, stage name, ...), so a
  // consumer's draws do not depend on how many draws other consumers made.
  static Rng stream(std::uint64_t seed, std::string_view key);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform01();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer in [0, n); n must be > 0.
  std::uint64_t index(std::uint64_t n);
  double exponential(double mean);
  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t fnv1a64(std::string_view bytes) noexcept;
std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace trove
