#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "gwrap/error.hpp"
#include "gwrap/fixtures.hpp"
#include "gwrap/render.hpp"
#include "gwrap/rng.hpp"
#include "gwrap/wrap.hpp"
#include "oracles.hpp"

namespace gwrap {
namespace {

FixtureParams small_plane() {
  FixtureParams p;
  p.count = 100;
  p.cameras = 4;
  p.width = 32;
  p.height = 32;
  return p;
}

double summed_loss(const GaussianScene& scene, double weight) {
  double total = 0.0;
  for (const auto& cam : scene.cameras())
    for (double l : normal_alignment_loss(scene, cam).per_pixel) total += l;
  return weight * total;
}

bool same_geometry(const OrientedGaussian& a, const OrientedGaussian& b) {
  return a.mean == b.mean && a.scales == b.scales && a.rotation.coeffs() == b.rotation.coeffs() &&
         a.opacity == b.opacity && a.color == b.color;
}

TEST(PerGaussianError, AlignedFlippedAndHidden) {
  FixtureParams p = small_plane();
  p.fov_deg = 20.0;  // no partially covered rim pixels
  const GaussianScene scene = make_fixture(FixtureKind::kPlanePatch, p);
  const auto err = per_gaussian_error(scene, scene.cameras());
  for (double e : err) EXPECT_LT(e, 0.01);

  std::vector<OrientedGaussian> gs = scene.gaussians();
  const std::size_t flipped = 45;
  gs[flipped].normal_sign = -gs[flipped].normal_sign;
  // A Gaussian outside every view never receives weight.
  OrientedGaussian hidden = gs[0];
  hidden.mean = Vec3(1000, 0, 0);
  gs.push_back(hidden);
  const GaussianScene edited(gs, scene.cameras());
  const auto err2 = per_gaussian_error(edited, edited.cameras());
  const auto worst = std::max_element(err2.begin(), err2.end()) - err2.begin();
  EXPECT_EQ(static_cast<std::size_t>(worst), flipped);
  EXPECT_EQ(err2.back(), 0.0);
}

TEST(DensifyFlip, AppendsNegatedClones) {
  const GaussianScene scene = make_fixture(FixtureKind::kPlanePatch, [] {
    FixtureParams p = small_plane();
    p.count = 9;
    return p;
  }());
  std::vector<OrientedGaussian> gs = scene.gaussians();
  gs.push_back(gs[0]);
  gs.back().mean.x() += 0.01;
  const GaussianScene ten(gs, scene.cameras());
  ASSERT_EQ(ten.size(), 10u);

  std::vector<double> errors(10, 0.1);
  errors[6] = 0.9;
  const GaussianScene out = densify_flip(ten, errors, 0.1);
  ASSERT_EQ(out.size(), 11u);
  EXPECT_EQ(out.normal(10), Vec3(-ten.normal(6)));
  EXPECT_TRUE(same_geometry(out.gaussian(10), ten.gaussian(6)));
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_TRUE(same_geometry(out.gaussian(i), ten.gaussian(i)));
    EXPECT_EQ(out.gaussian(i).normal_sign, ten.gaussian(i).normal_sign);
    EXPECT_EQ(out.gaussian(i).normal_dir, ten.gaussian(i).normal_dir);
  }

  // Equal errors: the lowest indices win.
  const GaussianScene tie = densify_flip(ten, std::vector<double>(10, 0.5), 0.3);
  ASSERT_EQ(tie.size(), 13u);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(tie.gaussian(10 + k).mean, ten.gaussian(k).mean);

  // At least one clone even for a tiny fraction.
  EXPECT_EQ(densify_flip(ten, errors, 1e-6).size(), 11u);
}

TEST(OrientationGradient, MatchesFiniteDifferenceOfRenderedLoss) {
  FixtureParams p = small_plane();
  p.count = 49;
  p.cameras = 2;
  GaussianScene scene = randomize_orientations(make_fixture(FixtureKind::kPlanePatch, p), 3);
  WrapConfig cfg;
  const OrientationGradient grad = orientation_gradient(scene, scene.cameras(), cfg);
  ASSERT_EQ(grad.sign.size(), scene.size());
  int checked = 0;
  for (std::size_t i = 0; i < scene.size(); i += 4) {
    const OrientedGaussian g = scene.gaussian(i);
    const double h = cfg.fd_step;
    scene.set_orientation(i, g.normal_sign + h, g.normal_dir);
    const double up = summed_loss(scene, cfg.loss_weight);
    scene.set_orientation(i, g.normal_sign - h, g.normal_dir);
    const double down = summed_loss(scene, cfg.loss_weight);
    scene.set_orientation(i, g.normal_sign, g.normal_dir);
    const double fd = (up - down) / (2 * h);
    EXPECT_NEAR(grad.sign[i], fd, 1e-6 * std::max(1.0, std::abs(fd))) << i;
    for (int a = 0; a < 3; ++a) {
      Vec3 dp = g.normal_dir, dm = g.normal_dir;
      dp[a] += h;
      dm[a] -= h;
      scene.set_orientation(i, g.normal_sign, dp);
      const double u = summed_loss(scene, cfg.loss_weight);
      scene.set_orientation(i, g.normal_sign, dm);
      const double d = summed_loss(scene, cfg.loss_weight);
      scene.set_orientation(i, g.normal_sign, g.normal_dir);
      EXPECT_NEAR(grad.dir[i][a], (u - d) / (2 * h), 1e-6 * std::max(1.0, std::abs(u - d) / (2 * h)));
    }
    if (grad.weight[i] > 0) ++checked;
  }
  EXPECT_GT(checked, 5);
}

TEST(OrientationGradient, StepHalvingConsistency) {
  const GaussianScene scene =
      randomize_orientations(make_fixture(FixtureKind::kPlanePatch, small_plane()), 5);
  WrapConfig a;
  WrapConfig b = a;
  b.fd_step = a.fd_step / 2;
  const auto ga = orientation_gradient(scene, scene.cameras(), a);
  const auto gb = orientation_gradient(scene, scene.cameras(), b);
  int checked = 0;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    if (ga.weight[i] <= a.min_weight || std::abs(ga.sign[i]) < 1e-9) continue;
    EXPECT_LT(std::abs(ga.sign[i] - gb.sign[i]), 0.1 * std::abs(gb.sign[i]));
    ++checked;
  }
  EXPECT_GT(checked, 20);
}

TEST(OptimizeNormals, ZeroIterationsIsIdentity) {
  const GaussianScene scene = make_fixture(FixtureKind::kPlanePatch, small_plane());
  WrapConfig cfg;
  cfg.iterations = 0;
  const WrapResult r = optimize_normals(scene, cfg);
  EXPECT_TRUE(r.report.loss.empty());
  for (std::size_t i = 0; i < scene.size(); ++i) {
    EXPECT_EQ(r.scene.gaussian(i).normal_sign, scene.gaussian(i).normal_sign);
    EXPECT_EQ(r.scene.gaussian(i).normal_dir, scene.gaussian(i).normal_dir);
  }
}

TEST(OptimizeNormals, Errors) {
  GaussianScene no_cams(make_fixture(FixtureKind::kPlanePatch, small_plane()).gaussians(), {});
  try {
    optimize_normals(no_cams, WrapConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoCameras);
  }
  WrapConfig bad;
  bad.fd_step = 0.0;
  try {
    validate(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadParams);
  }
}

TEST(OptimizeNormals, PlaneRecoversFromRandomSigns) {
  FixtureParams p = small_plane();
  p.cameras = 6;
  const GaussianScene truth = make_fixture(FixtureKind::kPlanePatch, p);
  std::vector<OrientedGaussian> gs = truth.gaussians();
  Engine rng = make_engine(9, 0);
  for (auto& g : gs) g.normal_sign = normal01(rng);
  const GaussianScene start(gs, truth.cameras());

  WrapConfig cfg;
  cfg.densify_every = 0;
  const WrapResult r = optimize_normals(start, cfg);
  ASSERT_EQ(r.report.loss.size(), 200u);
  EXPECT_LT(r.report.loss.back(), r.report.loss.front());

  const Vec3 n = fixture_plane_normal(p);
  const auto err = per_gaussian_error(r.scene, r.scene.cameras());
  int visible = 0, good = 0;
  for (std::size_t i = 0; i < r.scene.size(); ++i) {
    EXPECT_TRUE(same_geometry(r.scene.gaussian(i), start.gaussian(i)));
    if (err[i] == 0.0) continue;
    ++visible;
    good += r.scene.normal(i).dot(n) > 0.0;
  }
  EXPECT_GT(visible, 80);
  EXPECT_GE(good, 0.95 * visible);
}

TEST(OptimizeNormals, DeterministicAndReportsClones) {
  FixtureParams p = small_plane();
  const GaussianScene start = randomize_orientations(make_fixture(FixtureKind::kPlanePatch, p), 1);
  WrapConfig cfg;
  cfg.iterations = 12;
  cfg.densify_every = 5;
  const WrapResult a = optimize_normals(start, cfg);
  const WrapResult b = optimize_normals(start, cfg);
  EXPECT_EQ(a.report.loss, b.report.loss);
  EXPECT_EQ(a.report.clones_added, b.report.clones_added);
  ASSERT_EQ(a.report.clones_added.size(), 12u);
  EXPECT_EQ(a.report.clones_added[4], 5);
  EXPECT_EQ(a.report.clones_added[9], 5);
  EXPECT_EQ(a.report.clones_added[0], 0);
  EXPECT_EQ(a.scene.size(), start.size() + 10);
  EXPECT_EQ(a.report.error.size(), a.scene.size());

  const std::string path = (std::filesystem::temp_directory_path() / "gwrap_report.csv").string();
  write_report_csv(a.report, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "iteration,loss,clones_added");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 12);
  std::filesystem::remove(path);
}

TEST(RandomizeOrientations, SeededAndGeometryPreserving) {
  const GaussianScene scene = make_fixture(FixtureKind::kPlanePatch, small_plane());
  const GaussianScene a = randomize_orientations(scene, 4);
  const GaussianScene b = randomize_orientations(scene, 4);
  const GaussianScene c = randomize_orientations(scene, 5);
  bool differs = false;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    EXPECT_EQ(a.normal(i), b.normal(i));
    differs |= a.normal(i) != c.normal(i);
    EXPECT_TRUE(same_geometry(a.gaussian(i), scene.gaussian(i)));
    EXPECT_NEAR(a.gaussian(i).normal_dir.norm(), 1.0, 1e-12);
  }
  EXPECT_TRUE(differs);
}

}  // namespace
}  // namespace gwrap
