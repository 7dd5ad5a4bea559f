#pragma once

#include <string>
#include <string_view>

#include "gwrap/evalkit.hpp"
#include "gwrap/scene.hpp"

namespace gwrap {

enum class FixtureKind { kSphereShell, kPlanePatch, kTwoPlane, kCubeShell };

/// Throws kBadParams for an unknown name.
FixtureKind parse_fixture_kind(std::string_view name);
std::string_view to_string(FixtureKind kind);

struct FixtureParams {
  double radius = 1.0;      // sphere radius, cube half-size, plane half-extent
  int count = 400;          // Gaussians (plane kinds: per plane, rounded to a square grid)
  int cameras = 20;
  int width = 64;
  int height = 64;
  double fov_deg = 45.0;
  double camera_distance = 3.0;   // in units of the bounding radius
  double spacing_factor = 0.8;    // tangent scale over lattice spacing
  double thickness_ratio = 0.1;   // normal scale over tangent scale
  double opacity = 0.95;
  double normal_sign = 5.0;
  double tilt_deg = 0.0;     // plane kinds: rotation of the plane about the x axis
  double gap = 0.5;          // two_plane: slab thickness, in units of radius
  bool back_camera = false;  // plane_patch: one extra camera behind the plane
};

/// Throws kBadParams unless sizes are positive and counts at least 1.
void validate(const FixtureParams& params);

/// Deterministic synthetic scenes with outward-facing normals.
///
/// sphere_shell: Fibonacci-lattice Gaussians on the sphere of `radius` about the
/// origin, flattened along the radial direction, with cameras on a Fibonacci
/// sphere looking at the center.
/// plane_patch: a square grid on the plane z = 0 (tilted by `tilt_deg`), normals
/// along the plane normal, cameras on a cone above it.
/// two_plane: two patches at +-gap/2 facing away from each other.
/// cube_shell: a grid on each cube face, offset by half a cell from the edges.
GaussianScene make_fixture(FixtureKind kind, const FixtureParams& params = {});

/// Area-uniform samples of the analytic surface a fixture approximates: the
/// sphere, the plane square(s) or the six cube faces.
PointCloud fixture_surface_samples(FixtureKind kind, const FixtureParams& params,
                                   std::size_t count, std::uint64_t seed = 0);

/// Unit normal of the plane kinds after tilting.
Vec3 fixture_plane_normal(const FixtureParams& params);

}  // namespace gwrap
