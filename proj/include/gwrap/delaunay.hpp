#pragma once

#include <array>
#include <vector>

#include "gwrap/types.hpp"

namespace gwrap {

using Tet = std::array<int, 4>;

/// Tetrahedralization of a point set. `vertices` is the caller's point list,
/// unchanged; points merged as duplicates simply appear in no tet.
/// neighbors[t][k] is the tet across the face opposite local vertex k, or -1
/// on the convex hull.
struct TetMesh {
  std::vector<Vec3> vertices;
  std::vector<Tet> tets;
  std::vector<std::array<int, 4>> neighbors;
};

/// Local vertex triples of the four faces, each ordered so that its right-hand
/// normal points out of a positively oriented tet. Face k is opposite vertex k.
inline constexpr int kTetFace[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};

/// Signed volume times 6: det[b - a, c - a, d - a].
double tet_orientation(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

/// Incremental Bowyer-Watson Delaunay tetrahedralization.
///
/// Points within 1e-9 of an earlier point (relative to the bounding-box
/// diagonal) are merged into it. Predicates run on coordinates perturbed by a
/// deterministic per-index jitter of 1e-9 x diagonal and are evaluated exactly,
/// so the output is the Delaunay tetrahedralization of the perturbed points.
/// Throws kDegenerateInput when fewer than 4 distinct points remain or they
/// are coplanar.
TetMesh delaunay_tetrahedralize(const std::vector<Vec3>& points);

}  // namespace gwrap
