#pragma once

#include "gwrap/types.hpp"

namespace gwrap::detail {

/// Sign of det[b - a, c - a, d - a]: positive when d lies on the side of plane
/// abc that the right-hand rule on (a, b, c) points to. Exact.
int orient3d(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

/// For a positively oriented tet (a, b, c, d): +1 if e is strictly inside its
/// circumsphere, -1 if strictly outside, 0 if on it. Exact.
int insphere(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, const Vec3& e);

}  // namespace gwrap::detail
