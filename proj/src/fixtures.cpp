#include "gwrap/fixtures.hpp"

#include <cmath>
#include <numbers>

#include "gwrap/error.hpp"
#include "gwrap/rng.hpp"

namespace gwrap {

FixtureKind parse_fixture_kind(std::string_view name) {
  if (name == "sphere_shell") return FixtureKind::kSphereShell;
  if (name == "plane_patch") return FixtureKind::kPlanePatch;
  if (name == "two_plane") return FixtureKind::kTwoPlane;
  if (name == "cube_shell") return FixtureKind::kCubeShell;
  throw Error(ErrorCode::kBadParams, "unknown fixture kind '" + std::string(name) + "'");
}

std::string_view to_string(FixtureKind kind) {
  switch (kind) {
    case FixtureKind::kSphereShell: return "sphere_shell";
    case FixtureKind::kPlanePatch: return "plane_patch";
    case FixtureKind::kTwoPlane: return "two_plane";
    case FixtureKind::kCubeShell: return "cube_shell";
  }
  return "unknown";
}

void validate(const FixtureParams& p) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::kBadParams, std::string("fixture: ") + what);
  };
  require(p.radius > 0.0 && std::isfinite(p.radius), "radius must be positive");
  require(p.count >= 1, "count must be at least 1");
  require(p.cameras >= 1, "cameras must be at least 1");
  require(p.width >= 1 && p.height >= 1, "image size must be positive");
  require(p.fov_deg > 0.0 && p.fov_deg < 180.0, "fov_deg must be in (0, 180)");
  require(p.camera_distance > 1.0, "camera_distance must exceed 1");
  require(p.spacing_factor > 0.0, "spacing_factor must be positive");
  require(p.thickness_ratio > 0.0, "thickness_ratio must be positive");
  require(p.opacity > 0.0 && p.opacity <= kDefaultAlphaMax, "opacity must be in (0, alpha_max]");
  require(std::isfinite(p.normal_sign), "normal_sign must be finite");
  require(std::isfinite(p.tilt_deg), "tilt_deg must be finite");
  require(p.gap > 0.0, "gap must be positive");
}

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

OrientedGaussian surface_gaussian(const Vec3& mean, const Vec3& normal, double tangent,
                                  const FixtureParams& p) {
  OrientedGaussian g;
  g.mean = mean;
  g.scales = Vec3(tangent, tangent, p.thickness_ratio * tangent);
  g.rotation = Quat::FromTwoVectors(Vec3::UnitZ(), normal).normalized();
  g.opacity = p.opacity;
  g.normal_sign = p.normal_sign;
  g.normal_dir = normal;
  g.color = 0.5 * (normal + Vec3::Ones());
  return g;
}

Vec3 fibonacci_point(int i, int n) {
  const double z = 1.0 - (2.0 * i + 1.0) / n;
  const double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
  const double phi = i * std::numbers::pi * (3.0 - std::sqrt(5.0));
  return Vec3(rxy * std::cos(phi), rxy * std::sin(phi), z);
}

PinholeCamera camera_at(const Vec3& eye, const Vec3& target, const FixtureParams& p) {
  return PinholeCamera::look_at(eye, target, p.width, p.height, p.fov_deg * kDeg);
}

std::vector<PinholeCamera> sphere_cameras(double distance, const FixtureParams& p) {
  std::vector<PinholeCamera> cams;
  for (int i = 0; i < p.cameras; ++i)
    cams.push_back(camera_at(distance * fibonacci_point(i, p.cameras), Vec3::Zero(), p));
  return cams;
}

// Camera k of a cone around `axis`: the first on the axis, the rest on a ring
// 30 degrees off it.
Vec3 cone_direction(int k, int n, const Mat3& frame) {
  if (k == 0) return frame.col(2);
  const double theta = 30.0 * kDeg;
  const double phi = 2.0 * std::numbers::pi * (k - 1) / std::max(1, n - 1);
  const Vec3 local(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                   std::cos(theta));
  return frame * local;
}

int grid_side(int count) { return std::max(1, static_cast<int>(std::lround(std::sqrt(count)))); }

// Square grid of side 2 * radius centered at `center` in the plane spanned by
// the first two columns of `frame`.
void add_grid(std::vector<OrientedGaussian>& out, const Mat3& frame, const Vec3& center,
              const Vec3& normal, int side, double half, const FixtureParams& p) {
  const double h = 2.0 * half / side;
  for (int j = 0; j < side; ++j)
    for (int i = 0; i < side; ++i) {
      const double a = -half + (i + 0.5) * h;
      const double b = -half + (j + 0.5) * h;
      out.push_back(surface_gaussian(center + a * frame.col(0) + b * frame.col(1), normal,
                                     p.spacing_factor * h, p));
    }
}

}  // namespace

Vec3 fixture_plane_normal(const FixtureParams& p) {
  return Eigen::AngleAxisd(p.tilt_deg * kDeg, Vec3::UnitX()) * Vec3::UnitZ();
}

GaussianScene make_fixture(FixtureKind kind, const FixtureParams& p) {
  validate(p);
  std::vector<OrientedGaussian> gs;
  std::vector<PinholeCamera> cams;
  const double r = p.radius;

  switch (kind) {
    case FixtureKind::kSphereShell: {
      // Nearest-neighbor distance of a hexagonal lattice with n points on the sphere.
      const double spacing = r * std::sqrt(8.0 * std::numbers::pi / (std::sqrt(3.0) * p.count));
      for (int i = 0; i < p.count; ++i) {
        const Vec3 n = fibonacci_point(i, p.count);
        gs.push_back(surface_gaussian(r * n, n, p.spacing_factor * spacing, p));
      }
      cams = sphere_cameras(p.camera_distance * r, p);
      break;
    }
    case FixtureKind::kPlanePatch:
    case FixtureKind::kTwoPlane: {
      const Mat3 frame = Eigen::AngleAxisd(p.tilt_deg * kDeg, Vec3::UnitX()).toRotationMatrix();
      const Vec3 n = frame.col(2);
      const int side = grid_side(p.count);
      if (kind == FixtureKind::kPlanePatch) {
        add_grid(gs, frame, Vec3::Zero(), n, side, r, p);
        for (int k = 0; k < p.cameras; ++k)
          cams.push_back(
              camera_at(p.camera_distance * r * cone_direction(k, p.cameras, frame), Vec3::Zero(), p));
        if (p.back_camera) cams.push_back(camera_at(-p.camera_distance * r * n, Vec3::Zero(), p));
      } else {
        const double half_gap = 0.5 * p.gap * r;
        add_grid(gs, frame, half_gap * n, n, side, r, p);
        add_grid(gs, frame, -half_gap * n, -n, side, r, p);
        Mat3 below = frame;
        below.col(2) = -frame.col(2);
        below.col(1) = -frame.col(1);
        const int above = (p.cameras + 1) / 2;
        for (int k = 0; k < above; ++k)
          cams.push_back(
              camera_at(p.camera_distance * r * cone_direction(k, above, frame), Vec3::Zero(), p));
        for (int k = 0; k < p.cameras - above; ++k)
          cams.push_back(camera_at(
              p.camera_distance * r * cone_direction(k, p.cameras - above, below), Vec3::Zero(), p));
      }
      break;
    }
    case FixtureKind::kCubeShell: {
      const int side = grid_side(std::max(1, p.count / 6));
      for (int axis = 0; axis < 3; ++axis)
        for (int s : {1, -1}) {
          const Vec3 n = s * Vec3::Unit(axis);
          Mat3 frame;
          frame.col(0) = Vec3::Unit((axis + 1) % 3);
          frame.col(1) = Vec3::Unit((axis + 2) % 3);
          frame.col(2) = Vec3::Unit(axis);
          add_grid(gs, frame, r * n, n, side, r, p);
        }
      cams = sphere_cameras(p.camera_distance * std::sqrt(3.0) * r, p);
      break;
    }
  }
  return GaussianScene(std::move(gs), std::move(cams));
}

PointCloud fixture_surface_samples(FixtureKind kind, const FixtureParams& p, std::size_t count,
                                   std::uint64_t seed) {
  validate(p);
  const double r = p.radius;
  const Mat3 tilt = Eigen::AngleAxisd(p.tilt_deg * kDeg, Vec3::UnitX()).toRotationMatrix();
  PointCloud cloud;
  cloud.points.reserve(count);
  Engine rng = make_engine(seed, streams::kFixture);
  for (std::size_t i = 0; i < count; ++i) {
    const double a = 2.0 * uniform01(rng) - 1.0;
    const double b = 2.0 * uniform01(rng) - 1.0;
    switch (kind) {
      case FixtureKind::kSphereShell: {
        const double phi = std::numbers::pi * (b + 1.0);
        const double rxy = std::sqrt(std::max(0.0, 1.0 - a * a));
        cloud.points.push_back(r * Vec3(rxy * std::cos(phi), rxy * std::sin(phi), a));
        break;
      }
      case FixtureKind::kPlanePatch:
        cloud.points.push_back(tilt * Vec3(r * a, r * b, 0.0));
        break;
      case FixtureKind::kTwoPlane: {
        const double z = (uniform01(rng) < 0.5 ? 0.5 : -0.5) * p.gap * r;
        cloud.points.push_back(tilt * Vec3(r * a, r * b, z));
        break;
      }
      case FixtureKind::kCubeShell: {
        const auto face = static_cast<int>(uniform01(rng) * 6.0);
        const int axis = std::min(face, 5) / 2;
        Vec3 q;
        q[axis] = face % 2 ? -r : r;
        q[(axis + 1) % 3] = r * a;
        q[(axis + 2) % 3] = r * b;
        cloud.points.push_back(q);
        break;
      }
    }
  }
  return cloud;
}

}  // namespace gwrap
