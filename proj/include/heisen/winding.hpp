// Winding number of a sampled circle function.
#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "heisen/weyl.hpp"

namespace heisen {

/// (1/2 pi i) \oint d log f by summed principal phase increments.
inline int winding_number(const BoundaryFunction& f) {
  if (f.min_modulus() <= 1e-8) throw error(errc::zero_on_circle, "function vanishes on the circle");
  double total = 0.0;
  const std::size_t G = f.size();
  for (std::size_t j = 0; j < G; ++j) total += std::arg(f[(j + 1) % G] / f[j]);
  const double w = total / (2.0 * std::numbers::pi);
  const double r = std::abs(w - std::round(w));
  if (r > 0.01) throw error(errc::non_integral_winding, "winding residual " + fmt(r));
  return static_cast<int>(std::lround(w));
}

}  // namespace heisen
