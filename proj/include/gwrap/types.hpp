#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace gwrap {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// One oriented Gaussian primitive.
///
/// The oriented normal is stored as an unbounded sign parameter and a free
/// direction; the effective normal is tanh(normal_sign) * normal_dir / |normal_dir|
/// (see oriented_normal()). Flipping the sign of normal_sign flips the normal
/// without touching the direction.
struct OrientedGaussian {
  Vec3 mean = Vec3::Zero();
  Vec3 scales = Vec3::Ones();  // per-axis standard deviations, > 0
  Quat rotation = Quat::Identity();
  double opacity = 0.5;
  double normal_sign = 0.0;
  Vec3 normal_dir = Vec3::UnitZ();
  Vec3 color = Vec3::Constant(0.5);
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();  // unit length

  Vec3 at(double t) const { return origin + t * direction; }
};

/// Axis-aligned box. Default constructed boxes are empty.
struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  bool empty() const { return (lo.array() > hi.array()).any(); }
  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 extent() const { return hi - lo; }
  double diagonal() const { return empty() ? 0.0 : extent().norm(); }
};

/// Pinhole camera with OpenCV conventions: x right, y down, z forward.
/// `rotation`/`center` form the world-from-camera transform.
struct PinholeCamera {
  double fx = 1.0, fy = 1.0, cx = 0.5, cy = 0.5;
  int width = 1, height = 1;
  Mat3 rotation = Mat3::Identity();
  Vec3 center = Vec3::Zero();

  /// Unit ray through the center of pixel (u, v).
  Ray pixel_ray(int u, int v) const;
  /// Camera-space unit direction through pixel center (u, v).
  Vec3 pixel_direction_camera(int u, int v) const;
  Vec3 forward() const { return rotation.col(2); }

  static PinholeCamera look_at(const Vec3& eye, const Vec3& target,
                               int width, int height, double fov_y_radians);
};

/// Throws kInvalidArgument when intrinsics or pose are malformed.
void validate(const PinholeCamera& camera);

using Face = std::array<int, 3>;

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;

  bool empty() const { return faces.empty(); }
  double face_area(std::size_t f) const;
  Vec3 face_centroid(std::size_t f) const;
  Vec3 face_normal(std::size_t f) const;  // unnormalized, right-handed
  Aabb bounds() const;
};

/// Merges bit-identical vertices, drops faces with repeated indices or area
/// below `min_area`, and compacts unused vertices.
TriangleMesh cleanup(const TriangleMesh& mesh, double min_area = 1e-12);

/// 1-to-4 midpoint subdivision. Geometry is preserved exactly.
TriangleMesh subdivide_midpoint(const TriangleMesh& mesh);

}  // namespace gwrap
