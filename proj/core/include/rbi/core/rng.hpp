#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace rbi {

// Seeded random stream. Child streams are derived by labelled or indexed
// splitting so that a sub-computation's draws never depend on how many draws
// a sibling made.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const noexcept { return seed_; }

  Rng split(std::string_view label) const;
  Rng split(std::uint64_t index) const;

  // [0, 1)
  double uniform01();
  // lo + (hi - lo) * u; returns lo exactly when lo == hi.
  double uniform(double lo, double hi);
  // Inclusive on both ends.
  int uniform_int(int lo, int hi);
  double normal(double mean = 0.0, double stddev = 1.0);
  // p <= 0 never fires, p >= 1 always fires.
  bool bernoulli(double p);

  std::mt19937_64& engine() noexcept { return engine_; }

  // Engine state as text, for checkpoints.
  std::string state() const;
  void restore(const std::string& state);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// splitmix64 finaliser; used for seed derivation.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

}  // namespace rbi
