#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gwrap/spatial.hpp"
#include "gwrap/types.hpp"

namespace gwrap {

struct PointCloud {
  std::vector<Vec3> points;
  std::optional<Aabb> crop;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

enum class Protocol { kLegacy, kUniform, kVirtualScan };
std::string_view to_string(Protocol p);

struct EvalResult {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double chamfer = 0.0;
  double tau = 0.0;
  Protocol protocol = Protocol::kUniform;
  std::size_t pred_points = 0;
  std::size_t gt_points = 0;
};

inline constexpr std::size_t kDefaultUniformCount = 1000000;

/// Area-weighted uniform surface samples. Samples outside `crop` are redrawn
/// until `count` is reached; throws kCropEmpty if 100x `count` draws are spent.
PointCloud uniform_sample(const TriangleMesh& mesh, std::size_t count,
                          const std::optional<Aabb>& crop = std::nullopt,
                          std::uint64_t seed = 0);

/// All vertices followed by all face centroids, then cropped.
PointCloud legacy_point_cloud(const TriangleMesh& mesh,
                              const std::optional<Aabb>& crop = std::nullopt);

/// First-hit ray casting of the mesh from every camera pixel center.
PointCloud virtual_scan(const TriangleMesh& mesh, const std::vector<PinholeCamera>& cameras,
                        const std::optional<Aabb>& crop = std::nullopt);

/// Symmetric mean nearest-neighbor distance. Throws kEmptyCloud.
double chamfer(const PointCloud& a, const PointCloud& b);

/// Precision, recall and F1 at threshold tau, plus the chamfer distance.
/// Throws kEmptyCloud, or kInvalidArgument for tau <= 0.
EvalResult f1_at(const PointCloud& pred, const PointCloud& gt, double tau);

/// 1% of the diagonal of the crop box, or of the cloud bounds without one.
double default_tau(const PointCloud& gt);

struct BiasReport {
  EvalResult legacy_before, legacy_after;
  EvalResult uniform_before, uniform_after;
  std::size_t legacy_points_before = 0, legacy_points_after = 0;
  double legacy_delta() const { return legacy_after.f1 - legacy_before.f1; }
  double uniform_delta() const { return uniform_after.f1 - uniform_before.f1; }
};

/// Legacy vs uniform F1 on `mesh` and on its 1-to-4 midpoint subdivision.
BiasReport bias_experiment(const TriangleMesh& mesh, const PointCloud& gt, double tau,
                           std::size_t uniform_count = kDefaultUniformCount,
                           std::uint64_t seed = 0);

/// Triangle BVH answering closest-point and first-hit queries.
class MeshIndex {
 public:
  explicit MeshIndex(const TriangleMesh& mesh);

  /// Unsigned distance from p to the closest point on the mesh.
  double distance(const Vec3& p) const;
  /// Ray parameter of the first hit in (tmin, inf), or NaN.
  double first_hit(const Ray& ray, double tmin = 1e-9) const;

 private:
  TriangleMesh mesh_;
  Bvh bvh_;
};

}  // namespace gwrap
