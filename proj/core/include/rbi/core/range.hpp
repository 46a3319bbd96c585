#pragma once

#include <string>
#include <string_view>

#include "rbi/core/error.hpp"
#include "rbi/core/rng.hpp"

namespace rbi {

// Closed interval [lo, hi] that parameters are drawn from. lo == hi pins the
// parameter to a constant.
struct Range {
  double lo = 0.0;
  double hi = 0.0;

  double sample(Rng& rng) const { return rng.uniform(lo, hi); }
  bool contains(double v) const { return v >= lo && v <= hi; }
  bool is_zero() const { return lo == 0.0 && hi == 0.0; }

  void validate(std::string_view name) const {
    if (!(lo <= hi)) {
      throw ConfigError(std::string(name) + ": range lower bound exceeds upper bound");
    }
  }
};

}  // namespace rbi
