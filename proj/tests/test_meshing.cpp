#include <algorithm>
#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "gwrap/error.hpp"
#include "gwrap/evalkit.hpp"
#include "gwrap/fields.hpp"
#include "gwrap/fixtures.hpp"
#include "gwrap/meshing.hpp"
#include "gwrap/rng.hpp"
#include "oracles.hpp"

namespace gwrap {
namespace {

OrientedGaussian isotropic(const Vec3& mean, double sigma) {
  OrientedGaussian g;
  g.mean = mean;
  g.scales = Vec3::Constant(sigma);
  g.opacity = 0.9;
  g.normal_sign = 50.0;
  g.normal_dir = Vec3::UnitZ();
  return g;
}

const GaussianScene& thick_shell() {
  static const GaussianScene scene = [] {
    FixtureParams p;
    p.count = 400;
    p.thickness_ratio = 0.5;
    return make_fixture(FixtureKind::kSphereShell, p);
  }();
  return scene;
}

double enclosed_volume(const TriangleMesh& m) {
  double v = 0.0;
  for (const Face& f : m.faces) v += m.vertices[f[0]].dot(m.vertices[f[1]].cross(m.vertices[f[2]])) / 6.0;
  return v;
}

TetMesh single_tet() { return delaunay_tetrahedralize({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)}); }

TriangleMesh tet_surface() {
  TriangleMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  m.faces = {{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}};
  return m;
}

TEST(Pivots, OffsetFormulaSkipAndCount) {
  std::vector<OrientedGaussian> gs{isotropic(Vec3::Zero(), 0.1)};
  OrientedGaussian zero = isotropic(Vec3(1, 1, 1), 0.1);
  zero.normal_sign = 0.0;
  gs.push_back(zero);
  const PivotSet p = generate_pivots(GaussianScene(gs, {}));
  ASSERT_EQ(p.points.size(), 2u);
  EXPECT_EQ(p.skipped, 1u);
  EXPECT_TRUE(p.points[0].isApprox(Vec3::Zero()));
  EXPECT_NEAR((p.points[1] - Vec3(0, 0, 0.3)).norm(), 0.0, 1e-12);
  EXPECT_EQ(p.kind[0], PivotSet::Kind::kCenter);
  EXPECT_EQ(p.kind[1], PivotSet::Kind::kOffset);
  EXPECT_EQ(p.gaussian[1], 0u);

  const GaussianScene& shell = thick_shell();
  EXPECT_EQ(generate_pivots(shell).points.size(), 2 * shell.size());
  const PivotSet multi = generate_pivots(shell, true);
  EXPECT_EQ(multi.points.size(), 7 * shell.size());
}

TEST(Pivots, AnisotropicOffsetUsesExtentAlongNormal) {
  OrientedGaussian g = isotropic(Vec3(1, 2, 3), 1.0);
  g.scales = Vec3(0.5, 0.2, 0.05);
  g.rotation = Quat(Eigen::AngleAxisd(0.7, Vec3(1, 1, 0).normalized()));
  g.normal_dir = Vec3(0.3, -0.4, 1.0);
  const PivotSet p = generate_pivots(GaussianScene({g}, {}));
  const Vec3 n = oracle::normal(g).normalized();
  const double s = std::sqrt(n.dot(oracle::sigma(g) * n));
  EXPECT_LT((p.points[1] - (g.mean + 3.0 * s * n)).norm(), 1e-12);
}

TEST(MarchingTets, CaseTable) {
  const TetMesh t = single_tet();
  EXPECT_TRUE(marching_tetrahedra(t, {0.1, 0.2, 0.3, 0.4}, 0.5).mesh.empty());
  EXPECT_TRUE(marching_tetrahedra(t, {0.6, 0.7, 0.8, 0.9}, 0.5).mesh.empty());

  const IsoMesh one = marching_tetrahedra(t, {1.0, 0.0, 0.0, 0.0}, 0.5);
  ASSERT_EQ(one.mesh.faces.size(), 1u);
  ASSERT_EQ(one.mesh.vertices.size(), 3u);
  for (const Vec3& v : one.mesh.vertices) EXPECT_NEAR(v.sum(), 0.5, 1e-12);
  // Faces the low-value side, away from vertex 0.
  EXPECT_GT(one.mesh.face_normal(0).dot(Vec3::Ones()), 0.0);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(one.edge_inside[i], Vec3::Zero());
    EXPECT_NE(one.edge_outside[i], Vec3::Zero());
  }

  const IsoMesh two = marching_tetrahedra(t, {1.0, 1.0, 0.0, 0.0}, 0.5);
  EXPECT_EQ(two.mesh.faces.size(), 2u);
  EXPECT_EQ(two.mesh.vertices.size(), 4u);
  for (std::size_t f = 0; f < 2; ++f) {
    const Vec3 c = two.mesh.face_centroid(f);
    // Inside region holds vertices 0 and 1; the outward side points toward 2 and 3.
    EXPECT_GT(two.mesh.face_normal(f).dot(Vec3(-1, 1, 1)), 0.0) << c.transpose();
  }

  // Exactly at iso counts as outside.
  EXPECT_EQ(marching_tetrahedra(t, {0.5, 0.5, 0.5, 0.9}, 0.5).mesh.faces.size(), 1u);
}

TEST(MarchingTets, AnalyticSphereIsWatertightAndClose) {
  Engine rng = make_engine(61, 0);
  std::vector<Vec3> pts;
  for (int i = 0; i < 12000; ++i) {
    const Vec3 d = oracle::random_unit(rng);
    pts.push_back((0.85 + 0.3 * uniform01(rng)) * d);
  }
  for (int i = 0; i < 300; ++i)
    pts.emplace_back(3 * uniform01(rng) - 1.5, 3 * uniform01(rng) - 1.5, 3 * uniform01(rng) - 1.5);
  const TetMesh tets = delaunay_tetrahedralize(pts);
  std::vector<double> values;
  for (const Vec3& p : pts) values.push_back(0.5 - (p.norm() - 1.0) / 0.3);
  const TriangleMesh mesh = marching_tetrahedra(tets, values, 0.5).mesh;
  const WatertightReport w = watertight_check(mesh);
  EXPECT_TRUE(w.closed);
  EXPECT_EQ(w.boundary_edges, 0u);
  EXPECT_EQ(w.non_manifold_edges, 0u);

  double hausdorff = 0.0;
  for (const Vec3& v : mesh.vertices) hausdorff = std::max(hausdorff, std::abs(v.norm() - 1.0));
  for (int i = 0; i < 300; ++i)
    hausdorff = std::max(hausdorff, oracle::point_mesh_distance(oracle::random_unit(rng), mesh));
  EXPECT_LT(hausdorff, 0.03);
  // Outward orientation: the enclosed volume is positive.
  EXPECT_NEAR(enclosed_volume(mesh), 4.0 * M_PI / 3.0, 0.05);
}

TEST(Refine, ConvergesWithoutChangingTopology) {
  const GaussianScene& scene = thick_shell();
  const PivotSet pivots = generate_pivots(scene);
  const TetMesh tets = delaunay_tetrahedralize(pivots.points);
  std::vector<double> occ;
  for (const Vec3& p : pivots.points) occ.push_back(1.0 - vacancy_lower_bound(scene, p));
  IsoMesh iso = marching_tetrahedra(tets, occ, 0.5);
  const auto faces = iso.mesh.faces;
  const auto count = iso.mesh.vertices.size();
  ASSERT_GT(count, 100u);
  refine_to_isosurface(iso, scene);
  EXPECT_EQ(iso.mesh.faces, faces);
  EXPECT_EQ(iso.mesh.vertices.size(), count);
  double mean = 0.0;
  for (const Vec3& v : iso.mesh.vertices) mean += std::abs(1.0 - vacancy_lower_bound(scene, v) - 0.5);
  EXPECT_LT(mean / count, 1e-3);

  // A converged vertex stays put.
  IsoMesh again = iso;
  refine_to_isosurface(again, scene);
  std::size_t still = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (std::abs(vacancy_lower_bound(scene, iso.mesh.vertices[i]) - 0.5) >= 1e-3) continue;
    EXPECT_LT((again.mesh.vertices[i] - iso.mesh.vertices[i]).norm(), 1e-6);
    ++still;
  }
  EXPECT_GT(still, count / 2);
}

TEST(Mtet, DegenerateAndOpenScenes) {
  const PinholeCamera cam = PinholeCamera::look_at(Vec3(0, 0, 3), Vec3::Zero(), 8, 8, 0.5);
  try {
    const TriangleMesh m = mesh_mtet(GaussianScene({isotropic(Vec3::Zero(), 0.1)}, {cam}));
    EXPECT_TRUE(m.empty());
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateInput);
  }
  EXPECT_THROW(mesh_mtet(GaussianScene({isotropic(Vec3::Zero(), 0.1)}, {})), Error);

  FixtureParams p;
  p.count = 225;
  const GaussianScene plane = make_fixture(FixtureKind::kPlanePatch, p);
  const TriangleMesh m = mesh_mtet(plane);
  ASSERT_FALSE(m.empty());
  const WatertightReport w = watertight_check(m);
  EXPECT_GT(w.boundary_edges, 0u);
  // Any boundary sits on the rim of the patch, outside the middle 80%.
  std::map<std::pair<int, int>, int> uses;
  for (const Face& f : m.faces)
    for (int k = 0; k < 3; ++k) {
      const int a = f[k], b = f[(k + 1) % 3];
      ++uses[{std::min(a, b), std::max(a, b)}];
    }
  for (const auto& [e, n] : uses) {
    if (n != 1) continue;
    const Vec3 mid = 0.5 * (m.vertices[e.first] + m.vertices[e.second]);
    EXPECT_GT(std::max(std::abs(mid.x()), std::abs(mid.y())), 0.8);
  }
}

TEST(Mtet, ThickShellIsClosedAndRound) {
  const TriangleMesh m = mesh_mtet(thick_shell());
  const WatertightReport w = watertight_check(m);
  EXPECT_TRUE(w.closed);
  EXPECT_EQ(w.inconsistent_edges, 0u);
  const double r0 = m.vertices[0].norm();
  for (const Vec3& v : m.vertices) EXPECT_NEAR(v.norm(), r0, 0.1);
  EXPECT_NEAR(enclosed_volume(m), 4.0 * M_PI / 3.0 * r0 * r0 * r0, 0.15 * r0 * r0 * r0);
}

TEST(PamSample, SingleFaceAndDeterminism) {
  TriangleMesh tri;
  tri.vertices = {Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(0, 1, 0)};
  tri.faces = {{0, 1, 2}};
  const PinholeCamera cam = PinholeCamera::look_at(Vec3(0, 0, 5), Vec3::Zero(), 4, 4, 0.5);
  const auto pts = pam_sample_faces(tri, {cam}, 2000, 7);
  ASSERT_EQ(pts.size(), 2000u);
  for (const Vec3& p : pts) {
    EXPECT_NEAR(p.z(), 0.0, 1e-15);
    EXPECT_GE(p.x(), -1e-15);
    EXPECT_GE(p.y(), -1e-15);
    EXPECT_LE(p.x() / 2 + p.y(), 1.0 + 1e-12);
  }
  EXPECT_EQ(pam_sample_faces(tri, {cam}, 2000, 7), pts);
  EXPECT_NE(pam_sample_faces(tri, {cam}, 2000, 8), pts);
}

TEST(PamSample, InverseDistanceWeighting) {
  // Two unit right triangles; centroid distances 3 and 6 from the camera.
  TriangleMesh m;
  const Vec3 a(3, 0, 0), b(6, 0, 0);
  const Vec3 off = -Vec3(1, 1, 0) / 3.0;
  for (const Vec3& c : {a, b}) {
    const int base = static_cast<int>(m.vertices.size());
    m.vertices.push_back(c + off);
    m.vertices.push_back(c + off + Vec3(1, 0, 0));
    m.vertices.push_back(c + off + Vec3(0, 1, 0));
    m.faces.push_back({base, base + 1, base + 2});
  }
  ASSERT_NEAR(m.face_centroid(0).norm(), 3.0, 1e-12);
  ASSERT_NEAR(m.face_centroid(1).norm(), 6.0, 1e-12);
  const PinholeCamera cam = PinholeCamera::look_at(Vec3::Zero(), Vec3(1, 0, 0), 4, 4, 0.5);
  const auto pts = pam_sample_faces(m, {cam}, 100000, 3);
  std::size_t near = 0;
  for (const Vec3& p : pts) near += p.x() < 4.5;
  const double ratio = static_cast<double>(near) / static_cast<double>(pts.size() - near);
  EXPECT_NEAR(ratio, 2.0, 0.1);
}

TEST(PamSample, RegionOfInterest) {
  TriangleMesh sq;
  sq.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0)};
  sq.faces = {{0, 1, 2}, {0, 2, 3}};
  Aabb roi;
  roi.extend(Vec3(0, 0, -1));
  roi.extend(Vec3(0.5, 1, 1));
  const PinholeCamera cam = PinholeCamera::look_at(Vec3(0.5, 0.5, 3), Vec3(0.5, 0.5, 0), 4, 4, 0.5);
  const auto pts = pam_sample_faces(sq, {cam}, 1000, 1, roi);
  EXPECT_EQ(pts.size(), 1000u);
  for (const Vec3& p : pts) EXPECT_TRUE(roi.contains(p));
}

TEST(PamNewton, FixedPointsAndZeroField) {
  const GaussianScene& scene = thick_shell();
  const Vec3 far(5, 5, 5);
  EXPECT_EQ(pam_newton_step(scene, far), far);
  EXPECT_EQ(pam_newton_project({far}, scene, 10)[0], far);

  Engine rng = make_engine(62, 0);
  for (int i = 0; i < 10; ++i) {
    const Vec3 d = oracle::random_unit(rng);
    double lo = 0.5, hi = 1.5;
    for (int k = 0; k < 200 && hi - lo > 1e-15; ++k) {
      const double mid = 0.5 * (lo + hi);
      (vacancy_lower_bound(scene, mid * d) < 0.5 ? lo : hi) = mid;
    }
    const Vec3 x = lo * d;
    ASSERT_LT(std::abs(vacancy_lower_bound(scene, x) - 0.5), 1e-9);
    EXPECT_LT((pam_newton_step(scene, x) - x).norm(), 1e-6);
  }
  EXPECT_THROW(pam_newton_project({far}, scene, 0), Error);
}

TEST(PamNewton, ContractsTowardIsosurface) {
  const GaussianScene& scene = thick_shell();
  Engine rng = make_engine(63, 0);
  std::vector<Vec3> pts;
  for (int i = 0; i < 60; ++i) {
    const Vec3 d = oracle::random_unit(rng);
    double lo = 0.5, hi = 1.5;
    for (int k = 0; k < 50; ++k) {
      const double mid = 0.5 * (lo + hi);
      (vacancy_lower_bound(scene, mid * d) < 0.5 ? lo : hi) = mid;
    }
    pts.push_back((lo + (i % 2 ? 0.05 : -0.05)) * d);
  }
  auto median_err = [&](const std::vector<Vec3>& xs) {
    std::vector<double> e;
    for (const Vec3& x : xs) e.push_back(std::abs(vacancy_lower_bound(scene, x) - 0.5));
    std::nth_element(e.begin(), e.begin() + e.size() / 2, e.end());
    return e[e.size() / 2];
  };
  double prev = median_err(pts);
  for (int s = 0; s < 5; ++s) {
    pts = pam_newton_project(pts, scene, 1);
    const double cur = median_err(pts);
    EXPECT_LT(cur, prev) << "step " << s;
    prev = cur;
  }
}

TEST(PamFilter, Partition) {
  const GaussianScene& scene = thick_shell();
  Engine rng = make_engine(64, 0);
  std::vector<Vec3> pts;
  for (int i = 0; i < 200; ++i) pts.push_back(1.6 * uniform01(rng) * oracle::random_unit(rng));
  pts.push_back(Vec3(10, 0, 0));
  const FilterResult r = pam_filter(pts, scene, 0.1);
  EXPECT_EQ(r.kept.size() + r.removed, pts.size());
  std::size_t j = 0;
  for (const Vec3& p : pts) {
    const bool keep = std::abs(0.5 - vacancy_lower_bound(scene, p)) <= 0.1;
    if (keep) {
      ASSERT_LT(j, r.kept.size());
      EXPECT_EQ(r.kept[j++], p);
    }
  }
  EXPECT_EQ(j, r.kept.size());
  EXPECT_TRUE(std::find(r.kept.begin(), r.kept.end(), Vec3(10, 0, 0)) == r.kept.end());
  EXPECT_THROW(pam_filter(pts, scene, 0.0), Error);
}

TEST(PamClassify, InsideOutsideAndSeeded) {
  const GaussianScene& scene = thick_shell();
  std::vector<Vec3> pts{Vec3(0.1, 0, 0), Vec3(0, 0.1, 0), Vec3(0, 0, 0.1), Vec3(-0.1, -0.1, -0.1),
                        Vec3(3, 3, 3), Vec3(3.2, 3, 3), Vec3(3, 3.2, 3), Vec3(3, 3, 3.2)};
  TetMesh tets;
  tets.vertices = pts;
  tets.tets = {{0, 1, 2, 3}, {4, 5, 6, 7}};
  tets.neighbors = {{-1, -1, -1, -1}, {-1, -1, -1, -1}};
  const auto labels = pam_classify_tets(tets, scene, 8, 1);
  EXPECT_EQ(labels[0], 1);
  EXPECT_EQ(labels[1], 0);
  const TetMesh mixed = delaunay_tetrahedralize([&] {
    Engine rng = make_engine(65, 0);
    std::vector<Vec3> p;
    for (int i = 0; i < 300; ++i) p.push_back(1.5 * std::cbrt(uniform01(rng)) * oracle::random_unit(rng));
    return p;
  }());
  EXPECT_EQ(pam_classify_tets(mixed, scene, 8, 5), pam_classify_tets(mixed, scene, 8, 5));
}

TEST(PamExtract, EmptySingleAndClosure) {
  const TetMesh t = single_tet();
  EXPECT_TRUE(pam_extract(t, {0}).empty());
  const TriangleMesh one = pam_extract(t, {1});
  ASSERT_EQ(one.faces.size(), 4u);
  const Vec3 center(0.25, 0.25, 0.25);
  for (std::size_t f = 0; f < 4; ++f)
    EXPECT_GT(one.face_normal(f).dot(one.face_centroid(f) - center), 0.0);
  EXPECT_TRUE(watertight_check(one).closed);

  // Random labels, repaired, always extract to a closed manifold.
  Engine rng = make_engine(66, 0);
  std::vector<Vec3> pts;
  for (int i = 0; i < 400; ++i) pts.emplace_back(uniform01(rng), uniform01(rng), uniform01(rng));
  const TetMesh tets = delaunay_tetrahedralize(pts);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::uint8_t> labels(tets.tets.size());
    for (auto& l : labels) l = uniform01(rng) < 0.3;
    pam_repair_labels(tets, labels);
    const WatertightReport w = watertight_check(pam_extract(tets, labels));
    EXPECT_EQ(w.boundary_edges, 0u);
    EXPECT_EQ(w.non_manifold_edges, 0u);
    EXPECT_EQ(w.inconsistent_edges, 0u);
  }
}

TEST(Pam, RegionOfInterestAndInsufficientPoints) {
  PamConfig cfg;
  cfg.samples = 1500;
  Aabb roi;
  roi.extend(Vec3(-2, -2, 0));
  roi.extend(Vec3(2, 2, 2));
  cfg.roi = roi;
  PamReport rep;
  const TriangleMesh half = mesh_pam(thick_shell(), cfg, &rep);
  ASSERT_FALSE(half.empty());
  for (const Vec3& v : half.vertices) EXPECT_TRUE(roi.contains(v));
  EXPECT_LE(rep.kept, 1500u);
  EXPECT_GE(rep.rounds, 1);

  PamConfig tight;
  tight.samples = 50;
  tight.eps = 1e-15;
  tight.max_rounds = 1;
  try {
    mesh_pam(thick_shell(), tight);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientPoints);
  }
  PamConfig bad;
  bad.samples_per_tet = 0;
  EXPECT_THROW(validate(bad), Error);
}

TEST(Watertight, Examples) {
  const WatertightReport closed = watertight_check(tet_surface());
  EXPECT_TRUE(closed.closed);
  EXPECT_EQ(closed.boundary_edges, 0u);
  EXPECT_EQ(closed.non_manifold_edges, 0u);

  TriangleMesh open = tet_surface();
  open.faces.pop_back();
  const WatertightReport o = watertight_check(open);
  EXPECT_FALSE(o.closed);
  EXPECT_EQ(o.boundary_edges, 3u);

  // Two closed tetrahedra sharing one edge.
  TriangleMesh bowtie = tet_surface();
  TriangleMesh second = tet_surface();
  for (Vec3& v : second.vertices) v = Vec3(1, 0, 0) - v;  // point reflection keeps vertex 0<->1 edge
  const int base = 4;
  bowtie.vertices.push_back(second.vertices[2]);
  bowtie.vertices.push_back(second.vertices[3]);
  // Reflected tet reuses vertices 1 (image of 0) and 0 (image of 1).
  const int remap[4] = {1, 0, base, base + 1};
  for (const Face& f : second.faces) bowtie.faces.push_back({remap[f[0]], remap[f[2]], remap[f[1]]});
  const WatertightReport b = watertight_check(bowtie);
  EXPECT_FALSE(b.closed);
  EXPECT_GE(b.non_manifold_edges, 1u);

  TriangleMesh flipped = tet_surface();
  std::swap(flipped.faces[0][1], flipped.faces[0][2]);
  const WatertightReport f = watertight_check(flipped);
  EXPECT_FALSE(f.closed);
  EXPECT_GT(f.inconsistent_edges, 0u);
}

}  // namespace
}  // namespace gwrap
