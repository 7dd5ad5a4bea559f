#include <map>
#include <set>

#include <gtest/gtest.h>

#include "gwrap/delaunay.hpp"
#include "gwrap/error.hpp"
#include "gwrap/rng.hpp"
#include "oracles.hpp"

namespace gwrap {
namespace {

std::vector<Vec3> regular_tet() {
  return {Vec3(1, 1, 1), Vec3(1, -1, -1), Vec3(-1, 1, -1), Vec3(-1, -1, 1)};
}

void expect_valid(const TetMesh& m) {
  ASSERT_EQ(m.neighbors.size(), m.tets.size());
  for (std::size_t t = 0; t < m.tets.size(); ++t) {
    const Tet& tet = m.tets[t];
    EXPECT_GT(tet_orientation(m.vertices[tet[0]], m.vertices[tet[1]], m.vertices[tet[2]],
                              m.vertices[tet[3]]),
              -1e-12);
    for (int k = 0; k < 4; ++k) {
      const int n = m.neighbors[t][k];
      if (n < 0) continue;
      // Symmetric adjacency across the same three vertices.
      int back = -1;
      for (int j = 0; j < 4; ++j)
        if (m.neighbors[n][j] == static_cast<int>(t)) back = j;
      ASSERT_GE(back, 0);
      std::set<int> a, b;
      for (int j = 0; j < 3; ++j) {
        a.insert(tet[kTetFace[k][j]]);
        b.insert(m.tets[n][kTetFace[back][j]]);
      }
      EXPECT_EQ(a, b);
    }
  }
}

// Every interior face is shared by exactly two tets and the union of the
// tets has the volume of the convex hull, checked here for a box.
double total_volume(const TetMesh& m) {
  double v = 0.0;
  for (const Tet& t : m.tets)
    v += tet_orientation(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]], m.vertices[t[3]]) / 6.0;
  return v;
}

TEST(Delaunay, RegularTetrahedron) {
  const TetMesh m = delaunay_tetrahedralize(regular_tet());
  ASSERT_EQ(m.tets.size(), 1u);
  expect_valid(m);
  for (int k = 0; k < 4; ++k) EXPECT_EQ(m.neighbors[0][k], -1);
}

TEST(Delaunay, TetPlusCentroidIsAStar) {
  auto pts = regular_tet();
  pts.push_back(Vec3::Zero());
  const TetMesh m = delaunay_tetrahedralize(pts);
  ASSERT_EQ(m.tets.size(), 4u);
  for (const Tet& t : m.tets) EXPECT_NE(std::find(t.begin(), t.end(), 4), t.end());
  expect_valid(m);
  EXPECT_NEAR(total_volume(m), 8.0 / 3.0, 1e-9);
}

TEST(Delaunay, RandomCubeIsEmptySphere) {
  Engine rng = make_engine(51, 0);
  std::vector<Vec3> pts;
  for (int i = 0; i < 500; ++i) pts.emplace_back(uniform01(rng), uniform01(rng), uniform01(rng));
  const TetMesh m = delaunay_tetrahedralize(pts);
  expect_valid(m);
  EXPECT_LT(oracle::delaunay_violation(pts, m.tets), 1e-9);
  // Each point is used.
  std::set<int> used;
  for (const Tet& t : m.tets) used.insert(t.begin(), t.end());
  EXPECT_EQ(used.size(), pts.size());
}

TEST(Delaunay, GridPointsAreCospherical) {
  // Lattice input is maximally degenerate for the insphere predicate.
  std::vector<Vec3> pts;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      for (int k = 0; k < 6; ++k) pts.emplace_back(i, j, k);
  const TetMesh m = delaunay_tetrahedralize(pts);
  expect_valid(m);
  EXPECT_NEAR(total_volume(m), 125.0, 1e-6);
  // Flat tets over cospherical quads are legal after perturbation but have no
  // usable circumsphere.
  std::vector<Tet> solid;
  for (const Tet& t : m.tets)
    if (tet_orientation(pts[t[0]], pts[t[1]], pts[t[2]], pts[t[3]]) > 1e-6) solid.push_back(t);
  EXPECT_NEAR(total_volume(TetMesh{pts, solid, {}}), 125.0, 1e-6);
  EXPECT_LT(oracle::delaunay_violation(pts, solid), 1e-6);
}

TEST(Delaunay, DuplicatesAreMerged) {
  auto pts = regular_tet();
  pts.push_back(pts[2]);
  pts.push_back(pts[0] + Vec3::Constant(1e-13));
  const TetMesh m = delaunay_tetrahedralize(pts);
  ASSERT_EQ(m.tets.size(), 1u);
  EXPECT_EQ(m.vertices.size(), pts.size());
  for (int v : m.tets[0]) EXPECT_LT(v, 4);
}

TEST(Delaunay, DegenerateInputs) {
  auto expect_degenerate = [](const std::vector<Vec3>& pts) {
    try {
      delaunay_tetrahedralize(pts);
      ADD_FAILURE() << "expected kDegenerateInput";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kDegenerateInput);
    }
  };
  expect_degenerate({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0), Vec3(2, 3, 0)});
  expect_degenerate({Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(2, 2, 2), Vec3(3, 3, 3)});
  expect_degenerate({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)});
  expect_degenerate({Vec3(0, 0, 0), Vec3(0, 0, 0), Vec3(0, 0, 0), Vec3(0, 0, 0)});
}

TEST(Delaunay, Deterministic) {
  Engine rng = make_engine(52, 0);
  std::vector<Vec3> pts;
  for (int i = 0; i < 300; ++i) pts.emplace_back(normal01(rng), normal01(rng), normal01(rng));
  const TetMesh a = delaunay_tetrahedralize(pts);
  const TetMesh b = delaunay_tetrahedralize(pts);
  EXPECT_EQ(a.tets, b.tets);
  EXPECT_EQ(a.neighbors, b.neighbors);
}

TEST(Delaunay, ShellPointsLargeInput) {
  Engine rng = make_engine(53, 0);
  std::vector<Vec3> pts;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 d = oracle::random_unit(rng);
    pts.push_back((i % 2 ? 1.0 : 1.1) * d);
  }
  const TetMesh m = delaunay_tetrahedralize(pts);
  expect_valid(m);
  EXPECT_LT(oracle::delaunay_violation(pts, m.tets), 1e-9);
}

}  // namespace
}  // namespace gwrap
