#include <unistd.h>

#include <cstdlib>
#include <functional>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "gwrap/config.hpp"
#include "gwrap/error.hpp"
#include "gwrap/fixtures.hpp"
#include "gwrap/io.hpp"
#include "gwrap/rng.hpp"
#include "oracles.hpp"
#include "test_meshes.hpp"

namespace gwrap {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("gwrap_io_" + std::to_string(::getpid()))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIoError;
}

const char* kGaussianRow = "g 0 0 0 1 1 1 1 0 0 0 0.5 1 0 0 1 0.5 0.5 0.5\n";

TEST(SceneIo, RoundTripIsBitExact) {
  TempDir dir;
  Engine rng = make_engine(81, 0);
  SceneData data;
  for (int i = 0; i < 50; ++i) {
    OrientedGaussian g = oracle::random_gaussian(rng, 3.0);
    g.normal_dir = Vec3(normal01(rng), normal01(rng), normal01(rng));
    g.color = Vec3(uniform01(rng), uniform01(rng), uniform01(rng));
    data.gaussians.push_back(g);
  }
  data.cameras.push_back(PinholeCamera::look_at(Vec3(1.0 / 3.0, 2, 3), Vec3::Zero(), 40, 30, 0.7));
  data.has_camera_block = true;
  write_scene_data(data, dir.file("a.txt"));
  const SceneData back = read_scene_data(dir.file("a.txt"));
  ASSERT_EQ(back.gaussians.size(), 50u);
  ASSERT_EQ(back.cameras.size(), 1u);
  EXPECT_TRUE(back.has_camera_block);
  for (std::size_t i = 0; i < 50; ++i) {
    const auto& a = data.gaussians[i];
    const auto& b = back.gaussians[i];
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.scales, b.scales);
    EXPECT_EQ(a.rotation.coeffs(), b.rotation.coeffs());
    EXPECT_EQ(a.opacity, b.opacity);
    EXPECT_EQ(a.normal_sign, b.normal_sign);
    EXPECT_EQ(a.normal_dir, b.normal_dir);
    EXPECT_EQ(a.color, b.color);
  }
  const PinholeCamera& c = data.cameras[0];
  const PinholeCamera& d = back.cameras[0];
  EXPECT_EQ(c.fx, d.fx);
  EXPECT_EQ(c.cy, d.cy);
  EXPECT_EQ(c.width, d.width);
  EXPECT_EQ(c.rotation, d.rotation);
  EXPECT_EQ(c.center, d.center);
  write_scene_data(back, dir.file("b.txt"));
  EXPECT_EQ(slurp(dir.file("a.txt")), slurp(dir.file("b.txt")));

  const GaussianScene scene = load_scene(dir.file("a.txt"));
  save_scene(scene, dir.file("c.txt"));
  EXPECT_EQ(slurp(dir.file("a.txt")), slurp(dir.file("c.txt")));
}

TEST(SceneIo, MalformedInputs) {
  TempDir dir;
  const std::string path = dir.file("bad.txt");
  spit(path, "gwrap_scene 1\n# comment\ngaussians 2\n" + std::string(kGaussianRow) +
                 "g 0 0 0 1 1 1 0 0 0 0 0.5 1 0 0 1 0.5 0.5 0.5\ncameras 0\n");
  try {
    read_scene_data(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("gaussian record 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find(":5:"), std::string::npos) << msg;
  }

  spit(path, "gwrap_scene 2\ngaussians 0\n");
  EXPECT_EQ(code_of([&] { read_scene_data(path); }), ErrorCode::kVersionMismatch);

  spit(path, "gwrap_scene 1\ngaussians 1\n" + std::string(kGaussianRow).insert(2, "7 "));
  EXPECT_EQ(code_of([&] { read_scene_data(path); }), ErrorCode::kParseError);

  spit(path, "gwrap_scene 1\ngaussians 2\n" + std::string(kGaussianRow));
  EXPECT_EQ(code_of([&] { read_scene_data(path); }), ErrorCode::kParseError);

  spit(path, "not a scene\n");
  EXPECT_EQ(code_of([&] { read_scene_data(path); }), ErrorCode::kParseError);

  EXPECT_EQ(code_of([&] { read_scene_data(dir.file("missing.txt")); }), ErrorCode::kIoError);

  // No camera block: loads, but vacancy queries fail.
  spit(path, "gwrap_scene 1\ngaussians 1\n" + std::string(kGaussianRow));
  const SceneData d = read_scene_data(path);
  EXPECT_FALSE(d.has_camera_block);
  EXPECT_EQ(d.gaussians.size(), 1u);
  const GaussianScene s = load_scene(path);
  EXPECT_EQ(code_of([&] { vacancy_lower_bound(s, Vec3::Zero()); }), ErrorCode::kNoCameras);
}

TEST(MeshIo, ObjAndPlyRoundTrip) {
  TempDir dir;
  const TriangleMesh m = testmesh::icosphere(2, 1.0 / 3.0);
  for (const char* name : {"m.obj", "m.ply"}) {
    save_mesh(m, dir.file(name));
    const TriangleMesh back = load_mesh(dir.file(name));
    EXPECT_EQ(back.faces, m.faces) << name;
    EXPECT_EQ(back.vertices, m.vertices) << name;
  }
  spit(dir.file("quad.obj"), "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
  const TriangleMesh quad = load_mesh(dir.file("quad.obj"));
  EXPECT_EQ(quad.faces.size(), 2u);
  spit(dir.file("ascii.ply"),
       "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\n"
       "property float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n"
       "0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
  const TriangleMesh tri = load_mesh(dir.file("ascii.ply"));
  ASSERT_EQ(tri.faces.size(), 1u);
  EXPECT_EQ(tri.vertices[1], Vec3(1, 0, 0));
  EXPECT_EQ(code_of([&] { save_mesh(m, dir.file("m.stl")); }), ErrorCode::kInvalidArgument);
}

TEST(PointCloudIo, RoundTrip) {
  TempDir dir;
  Engine rng = make_engine(82, 0);
  PointCloud pc;
  for (int i = 0; i < 100; ++i) pc.points.emplace_back(normal01(rng), normal01(rng), normal01(rng));
  save_point_cloud(pc, dir.file("p.ply"));
  EXPECT_EQ(load_point_cloud(dir.file("p.ply")).points, pc.points);
  // Mesh vertices read as a cloud too.
  save_mesh(testmesh::cube(), dir.file("c.ply"));
  EXPECT_EQ(load_point_cloud(dir.file("c.ply")).size(), 8u);
}

TEST(MapIo, RawMapAndPng) {
  TempDir dir;
  std::vector<float> data(5 * 3 * 3);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = 0.1f * static_cast<float>(i) - 1.0f;
  write_raw_map(dir.file("m.gwmp"), 5, 3, 3, data);
  const RawMap back = read_raw_map(dir.file("m.gwmp"));
  EXPECT_EQ(back.width, 5);
  EXPECT_EQ(back.height, 3);
  EXPECT_EQ(back.channels, 3);
  EXPECT_EQ(back.data, data);

  write_png(dir.file("m.png"), 5, 3, 3, data);
  const std::string png = slurp(dir.file("m.png"));
  ASSERT_GE(png.size(), 8u);
  EXPECT_EQ(png.substr(0, 8), std::string("\x89PNG\r\n\x1a\n", 8));
  EXPECT_EQ(code_of([&] { write_png(dir.file("x.png"), 5, 3, 2, data); }),
            ErrorCode::kInvalidArgument);
  spit(dir.file("bad.gwmp"), "nope");
  EXPECT_EQ(code_of([&] { read_raw_map(dir.file("bad.gwmp")); }), ErrorCode::kParseError);
}

TEST(Json, EvalResultFields) {
  EvalResult r;
  r.f1 = 0.25;
  r.protocol = Protocol::kVirtualScan;
  r.pred_points = 12;
  const std::string j = to_json(r);
  EXPECT_NE(j.find("\"f1\": 0.25"), std::string::npos) << j;
  EXPECT_NE(j.find("\"pred_points\": 12"), std::string::npos) << j;
  EXPECT_NE(j.find("\"protocol\": \"" + std::string(to_string(Protocol::kVirtualScan)) + "\""),
            std::string::npos)
      << j;
}

TEST(Config, DefaultsDumpAndParse) {
  const RunConfig def;
  EXPECT_EQ(def.wrap.loss_weight, 0.05);
  EXPECT_EQ(def.wrap.iterations, 200);
  EXPECT_EQ(def.scene.alpha_max, 0.999);
  EXPECT_EQ(def.neighbors, 32);
  EXPECT_EQ(def.render.early_stop_T, 1e-4);
  EXPECT_EQ(def.pam.eps, 0.1);
  EXPECT_EQ(def.pam.samples_per_tet, 8);

  const std::string text = dump_config(def);
  EXPECT_EQ(dump_config(parse_config(text)), text);

  const RunConfig c = parse_config(R"({"seed": 17, "wrap": {"iterations": 7, "loss_weight": 0.5},
                                       "pam": {"roi": [-1, -1, 0, 1, 1, 1]}})");
  EXPECT_EQ(c.seed, 17u);
  EXPECT_EQ(c.wrap.iterations, 7);
  EXPECT_EQ(c.wrap.loss_weight, 0.5);
  EXPECT_EQ(c.wrap.lr_sign, def.wrap.lr_sign);
  EXPECT_EQ(c.wrap.seed, 17u);
  EXPECT_EQ(c.pam.seed, 17u);
  ASSERT_TRUE(c.pam.roi.has_value());
  EXPECT_EQ(c.pam.roi->lo, Vec3(-1, -1, 0));
  EXPECT_EQ(dump_config(parse_config(dump_config(c))), dump_config(c));

  EXPECT_EQ(code_of([] { parse_config(R"({"wrap": {"iterationz": 3}})"); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { parse_config(R"({"bogus": 1})"); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { parse_config(R"({"wrap": {"iterations": "many"}})"); }),
            ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { parse_config("{not json"); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { parse_config(R"({"pam": {"eps": -1}})"); }), ErrorCode::kBadParams);
  EXPECT_EQ(code_of([] { parse_config(R"({"scene": {"alpha_max": 1.5}})"); }), ErrorCode::kBadParams);
}

TEST(Fixtures, SphereGeometryAndNormals) {
  FixtureParams p;
  p.radius = 2.0;
  const GaussianScene s = make_fixture(FixtureKind::kSphereShell, p);
  ASSERT_EQ(s.size(), 400u);
  EXPECT_EQ(s.cameras().size(), 20u);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Vec3 mu = s.gaussian(i).mean;
    EXPECT_NEAR(mu.norm(), 2.0, 1e-9);
    EXPECT_GT(s.normal(i).normalized().dot(mu.normalized()), 0.99);
  }
  for (const PinholeCamera& c : s.cameras()) {
    EXPECT_NEAR(c.center.norm(), 6.0, 1e-9);
    EXPECT_GT(c.forward().dot(-c.center.normalized()), 1.0 - 1e-12);
  }
  for (const Vec3& q : fixture_surface_samples(FixtureKind::kSphereShell, p, 100, 1).points)
    EXPECT_NEAR(q.norm(), 2.0, 1e-12);
}

TEST(Fixtures, PlanesAndCube) {
  FixtureParams p;
  p.tilt_deg = 30.0;
  const GaussianScene plane = make_fixture(FixtureKind::kPlanePatch, p);
  const Vec3 n = fixture_plane_normal(p);
  EXPECT_NEAR(n.dot(Vec3::UnitZ()), std::cos(M_PI / 6), 1e-12);
  for (std::size_t i = 0; i < plane.size(); ++i) {
    EXPECT_NEAR(plane.gaussian(i).mean.dot(n), 0.0, 1e-12);
    EXPECT_GT(plane.normal(i).normalized().dot(n), 0.999);
  }

  const GaussianScene two = make_fixture(FixtureKind::kTwoPlane, FixtureParams{});
  EXPECT_EQ(two.size(), 2 * make_fixture(FixtureKind::kPlanePatch, FixtureParams{}).size());
  for (std::size_t i = 0; i < two.size(); ++i) {
    const Vec3 mu = two.gaussian(i).mean;
    EXPECT_NEAR(std::abs(mu.z()), 0.25, 1e-12);
    EXPECT_GT(two.normal(i).z() * mu.z(), 0.0);
  }

  const GaussianScene cube = make_fixture(FixtureKind::kCubeShell, FixtureParams{});
  for (std::size_t i = 0; i < cube.size(); ++i) {
    const Vec3 mu = cube.gaussian(i).mean;
    int axis = 0;
    mu.cwiseAbs().maxCoeff(&axis);
    EXPECT_NEAR(std::abs(mu[axis]), 1.0, 1e-12);
    EXPECT_GT(cube.normal(i)[axis] * mu[axis], 0.0);
  }
  for (const Vec3& q : fixture_surface_samples(FixtureKind::kCubeShell, FixtureParams{}, 200, 2).points)
    EXPECT_NEAR(q.cwiseAbs().maxCoeff(), 1.0, 1e-12);
}

TEST(Fixtures, DeterministicAndValidated) {
  TempDir dir;
  save_scene(make_fixture(FixtureKind::kSphereShell), dir.file("a.txt"));
  save_scene(make_fixture(FixtureKind::kSphereShell), dir.file("b.txt"));
  EXPECT_EQ(slurp(dir.file("a.txt")), slurp(dir.file("b.txt")));

  FixtureParams bad;
  bad.count = 0;
  EXPECT_EQ(code_of([&] { make_fixture(FixtureKind::kSphereShell, bad); }), ErrorCode::kBadParams);
  bad = FixtureParams{};
  bad.radius = -1.0;
  EXPECT_EQ(code_of([&] { make_fixture(FixtureKind::kCubeShell, bad); }), ErrorCode::kBadParams);
  EXPECT_EQ(code_of([] { parse_fixture_kind("torus"); }), ErrorCode::kBadParams);
  EXPECT_EQ(parse_fixture_kind(to_string(FixtureKind::kTwoPlane)), FixtureKind::kTwoPlane);
}

TEST(Threads, EnvironmentLimit) {
  ::setenv("GWRAP_THREADS", "1", 1);
  EXPECT_EQ(apply_thread_limit(), 1);
  ::setenv("GWRAP_THREADS", "abc", 1);
  EXPECT_EQ(apply_thread_limit(), 1);
  ::unsetenv("GWRAP_THREADS");
}

}  // namespace
}  // namespace gwrap
