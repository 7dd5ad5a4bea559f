#include "gwrap/rng.hpp"

#include <cmath>
#include <numbers>

namespace gwrap {

double normal01(Engine& engine) {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform01(engine);
  const double u2 = uniform01(engine);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace gwrap
