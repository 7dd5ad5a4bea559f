#pragma once

#include <cstdint>
#include <random>

namespace gwrap {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent seed for work item `index` of logical stream `stream`.
/// Parallel loops seed one engine per item, so results do not depend on the
/// thread schedule.
constexpr std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream,
                                   std::uint64_t index = 0) {
  return mix64(mix64(seed ^ mix64(stream)) + index);
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
  return Engine(split_seed(seed, stream, index));
}

/// Uniform double in [0, 1) from the top 53 bits. Unlike
/// std::uniform_real_distribution its output is pinned across standard libraries.
inline double uniform01(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on uniform01.
double normal01(Engine& engine);

// Stream identifiers. Keep them distinct so seeds never collide across modules.
namespace streams {
inline constexpr std::uint64_t kFixture = 1;
inline constexpr std::uint64_t kWrapViews = 2;
inline constexpr std::uint64_t kWrapInit = 3;
inline constexpr std::uint64_t kPamSample = 4;
inline constexpr std::uint64_t kPamClassify = 5;
inline constexpr std::uint64_t kUniformSample = 6;
inline constexpr std::uint64_t kVacancySubset = 7;
inline constexpr std::uint64_t kDelaunayJitter = 8;
}  // namespace streams

}  // namespace gwrap
