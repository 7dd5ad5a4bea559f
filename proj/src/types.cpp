#include "gwrap/types.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "gwrap/error.hpp"

namespace gwrap {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kZeroNormal: return "ZeroNormal";
    case ErrorCode::kNoCameras: return "NoCameras";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kInsufficientPoints: return "InsufficientPoints";
    case ErrorCode::kCropEmpty: return "CropEmpty";
    case ErrorCode::kEmptyCloud: return "EmptyCloud";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kBadParams: return "BadParams";
    case ErrorCode::kDiverged: return "Diverged";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Vec3 PinholeCamera::pixel_direction_camera(int u, int v) const {
  return Vec3((u + 0.5 - cx) / fx, (v + 0.5 - cy) / fy, 1.0).normalized();
}

Ray PinholeCamera::pixel_ray(int u, int v) const {
  return Ray{center, rotation * pixel_direction_camera(u, v)};
}

PinholeCamera PinholeCamera::look_at(const Vec3& eye, const Vec3& target, int width,
                                     int height, double fov_y_radians) {
  PinholeCamera cam;
  cam.width = width;
  cam.height = height;
  cam.fy = 0.5 * height / std::tan(0.5 * fov_y_radians);
  cam.fx = cam.fy;
  cam.cx = 0.5 * width;
  cam.cy = 0.5 * height;
  const Vec3 z = (target - eye).normalized();
  Vec3 up = Vec3::UnitZ();
  if (std::abs(z.dot(up)) > 0.95) up = Vec3::UnitY();
  const Vec3 x = z.cross(up).normalized();
  const Vec3 y = z.cross(x);
  cam.rotation.col(0) = x;
  cam.rotation.col(1) = y;
  cam.rotation.col(2) = z;
  cam.center = eye;
  return cam;
}

void validate(const PinholeCamera& camera) {
  auto fail = [](const char* what) {
    throw Error(ErrorCode::kInvalidArgument, std::string("invalid camera: ") + what);
  };
  if (!(camera.fx > 0.0 && camera.fy > 0.0)) fail("focal lengths must be positive");
  if (camera.width < 1 || camera.height < 1) fail("resolution must be at least 1x1");
  if (!(camera.cx >= 0.0 && camera.cx <= camera.width && camera.cy >= 0.0 &&
        camera.cy <= camera.height))
    fail("principal point outside image");
  const Mat3 rtr = camera.rotation.transpose() * camera.rotation;
  if ((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
      camera.rotation.determinant() < 0.0)
    fail("pose rotation is not orthonormal");
  if (!camera.center.allFinite()) fail("non-finite camera center");
}

double TriangleMesh::face_area(std::size_t f) const { return 0.5 * face_normal(f).norm(); }

Vec3 TriangleMesh::face_centroid(std::size_t f) const {
  const Face& t = faces[f];
  return (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0;
}

Vec3 TriangleMesh::face_normal(std::size_t f) const {
  const Face& t = faces[f];
  return (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
}

Aabb TriangleMesh::bounds() const {
  Aabb b;
  for (const Vec3& v : vertices) b.extend(v);
  return b;
}

TriangleMesh cleanup(const TriangleMesh& mesh, double min_area) {
  auto key_less = [](const Vec3& a, const Vec3& b) {
    return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
  };
  std::map<Vec3, int, decltype(key_less)> weld(key_less);
  std::vector<int> remap(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    auto [it, inserted] = weld.emplace(mesh.vertices[i], static_cast<int>(i));
    remap[i] = it->second;
  }

  TriangleMesh out;
  std::vector<int> compact(mesh.vertices.size(), -1);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    Face t{remap[mesh.faces[f][0]], remap[mesh.faces[f][1]], remap[mesh.faces[f][2]]};
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
    const Vec3& a = mesh.vertices[t[0]];
    const double area =
        0.5 * (mesh.vertices[t[1]] - a).cross(mesh.vertices[t[2]] - a).norm();
    if (area < min_area) continue;
    for (int& idx : t) {
      if (compact[idx] < 0) {
        compact[idx] = static_cast<int>(out.vertices.size());
        out.vertices.push_back(mesh.vertices[idx]);
      }
      idx = compact[idx];
    }
    out.faces.push_back(t);
  }
  return out;
}

TriangleMesh subdivide_midpoint(const TriangleMesh& mesh) {
  TriangleMesh out;
  out.vertices = mesh.vertices;
  std::unordered_map<long long, int> midpoints;
  const long long n = static_cast<long long>(mesh.vertices.size());
  auto midpoint = [&](int a, int b) {
    const long long key = static_cast<long long>(std::min(a, b)) * n + std::max(a, b);
    auto it = midpoints.find(key);
    if (it != midpoints.end()) return it->second;
    const int idx = static_cast<int>(out.vertices.size());
    out.vertices.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
    midpoints.emplace(key, idx);
    return idx;
  };
  out.faces.reserve(mesh.faces.size() * 4);
  for (const Face& t : mesh.faces) {
    const int ab = midpoint(t[0], t[1]);
    const int bc = midpoint(t[1], t[2]);
    const int ca = midpoint(t[2], t[0]);
    out.faces.push_back({t[0], ab, ca});
    out.faces.push_back({ab, t[1], bc});
    out.faces.push_back({ca, bc, t[2]});
    out.faces.push_back({ab, bc, ca});
  }
  return out;
}

}  // namespace gwrap
