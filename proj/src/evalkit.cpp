#include "gwrap/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gwrap/error.hpp"
#include "gwrap/rng.hpp"

namespace gwrap {

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::kLegacy: return "legacy";
    case Protocol::kUniform: return "uniform";
    case Protocol::kVirtualScan: return "virtual_scan";
  }
  return "unknown";
}

namespace {

constexpr std::size_t kChunk = 4096;

Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

// Moller-Trumbore; returns NaN on a miss.
double intersect(const Ray& ray, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 h = ray.direction.cross(e2);
  const double det = e1.dot(h);
  if (std::abs(det) < 1e-300) return std::numeric_limits<double>::quiet_NaN();
  const double inv = 1.0 / det;
  const Vec3 s = ray.origin - a;
  const double u = inv * s.dot(h);
  if (u < 0.0 || u > 1.0) return std::numeric_limits<double>::quiet_NaN();
  const Vec3 q = s.cross(e1);
  const double v = inv * ray.direction.dot(q);
  if (v < 0.0 || u + v > 1.0) return std::numeric_limits<double>::quiet_NaN();
  return inv * e2.dot(q);
}

std::vector<Aabb> triangle_boxes(const TriangleMesh& mesh) {
  std::vector<Aabb> boxes(mesh.faces.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f)
    for (int j = 0; j < 3; ++j) boxes[f].extend(mesh.vertices[mesh.faces[f][j]]);
  return boxes;
}

PointCloud crop_cloud(std::vector<Vec3> points, const std::optional<Aabb>& crop) {
  PointCloud out;
  out.crop = crop;
  if (!crop) {
    out.points = std::move(points);
    return out;
  }
  for (const Vec3& p : points)
    if (crop->contains(p)) out.points.push_back(p);
  return out;
}

std::vector<double> nn_distances(const std::vector<Vec3>& queries, const KdTree& tree) {
  std::vector<double> d(queries.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(queries.size()); ++i)
    d[i] = std::sqrt(tree.nearest(queries[i]).second);
  return d;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

MeshIndex::MeshIndex(const TriangleMesh& mesh) : mesh_(mesh), bvh_(triangle_boxes(mesh)) {}

double MeshIndex::distance(const Vec3& p) const {
  return bvh_
      .nearest(p,
               [&](std::size_t f) {
                 const Face& t = mesh_.faces[f];
                 return (closest_on_triangle(p, mesh_.vertices[t[0]], mesh_.vertices[t[1]],
                                             mesh_.vertices[t[2]]) -
                         p)
                     .norm();
               })
      .second;
}

double MeshIndex::first_hit(const Ray& ray, double tmin) const {
  double best = std::numeric_limits<double>::infinity();
  bvh_.visit_ray(ray, tmin, best, [&](std::size_t f, double tmax) {
    const Face& t = mesh_.faces[f];
    const double hit =
        intersect(ray, mesh_.vertices[t[0]], mesh_.vertices[t[1]], mesh_.vertices[t[2]]);
    if (hit > tmin && hit < tmax) best = hit;
    return best;
  });
  return std::isfinite(best) ? best : std::numeric_limits<double>::quiet_NaN();
}

PointCloud uniform_sample(const TriangleMesh& mesh, std::size_t count,
                          const std::optional<Aabb>& crop, std::uint64_t seed) {
  if (mesh.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot sample an empty mesh");
  std::vector<double> cdf(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) cdf[f] = (total += mesh.face_area(f));
  if (!(total > 0.0)) throw Error(ErrorCode::kInvalidArgument, "mesh has zero area");

  PointCloud out;
  out.crop = crop;
  out.points.reserve(count);
  const std::size_t budget = crop ? 100 * count : count;
  const std::size_t chunks_total = (budget + kChunk - 1) / kChunk;
  // Chunks are seeded by their index, so the result does not depend on threading.
  const std::size_t batch = 64;
  for (std::size_t first = 0; first < chunks_total && out.points.size() < count; first += batch) {
    const std::size_t last = std::min(chunks_total, first + batch);
    std::vector<std::vector<Vec3>> produced(last - first);
#pragma omp parallel for schedule(dynamic, 1)
    for (long long c = static_cast<long long>(first); c < static_cast<long long>(last); ++c) {
      Engine rng = make_engine(seed, streams::kUniformSample, static_cast<std::uint64_t>(c));
      const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
      const std::size_t end = std::min(budget, begin + kChunk);
      auto& local = produced[c - first];
      local.reserve(end - begin);
      for (std::size_t d = begin; d < end; ++d) {
        const double pick = uniform01(rng) * total;
        const std::size_t f = std::min<std::size_t>(
            std::upper_bound(cdf.begin(), cdf.end(), pick) - cdf.begin(), cdf.size() - 1);
        const double r1 = std::sqrt(uniform01(rng));
        const double r2 = uniform01(rng);
        const Face& t = mesh.faces[f];
        const Vec3 p = (1.0 - r1) * mesh.vertices[t[0]] +
                       r1 * (1.0 - r2) * mesh.vertices[t[1]] + r1 * r2 * mesh.vertices[t[2]];
        if (!crop || crop->contains(p)) local.push_back(p);
      }
    }
    for (const auto& local : produced)
      for (const Vec3& p : local) {
        if (out.points.size() == count) break;
        out.points.push_back(p);
      }
  }
  if (out.points.size() < count)
    throw Error(ErrorCode::kCropEmpty, "crop box leaves too little mesh area to sample");
  return out;
}

PointCloud legacy_point_cloud(const TriangleMesh& mesh, const std::optional<Aabb>& crop) {
  if (mesh.empty()) throw Error(ErrorCode::kInvalidArgument, "legacy cloud of an empty mesh");
  std::vector<Vec3> pts = mesh.vertices;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) pts.push_back(mesh.face_centroid(f));
  return crop_cloud(std::move(pts), crop);
}

PointCloud virtual_scan(const TriangleMesh& mesh, const std::vector<PinholeCamera>& cameras,
                        const std::optional<Aabb>& crop) {
  if (mesh.empty()) throw Error(ErrorCode::kInvalidArgument, "virtual scan of an empty mesh");
  if (cameras.empty()) throw Error(ErrorCode::kNoCameras, "virtual scan needs cameras");
  const MeshIndex index(mesh);
  std::vector<Vec3> pts;
  for (const PinholeCamera& cam : cameras) {
    const std::size_t n = static_cast<std::size_t>(cam.width) * cam.height;
    std::vector<double> depth(n);
#pragma omp parallel for schedule(dynamic, 64)
    for (long long p = 0; p < static_cast<long long>(n); ++p)
      depth[p] = index.first_hit(cam.pixel_ray(static_cast<int>(p % cam.width),
                                               static_cast<int>(p / cam.width)));
    for (std::size_t p = 0; p < n; ++p)
      if (std::isfinite(depth[p]))
        pts.push_back(cam.pixel_ray(static_cast<int>(p % cam.width),
                                    static_cast<int>(p / cam.width))
                          .at(depth[p]));
  }
  return crop_cloud(std::move(pts), crop);
}

double chamfer(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::kEmptyCloud, "chamfer of an empty cloud");
  const KdTree ta(a.points), tb(b.points);
  return 0.5 * (mean(nn_distances(a.points, tb)) + mean(nn_distances(b.points, ta)));
}

EvalResult f1_at(const PointCloud& pred, const PointCloud& gt, double tau) {
  if (pred.empty() || gt.empty()) throw Error(ErrorCode::kEmptyCloud, "f1 of an empty cloud");
  if (!(tau > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tau must be positive");
  const KdTree tp(pred.points), tg(gt.points);
  const std::vector<double> d_pred = nn_distances(pred.points, tg);
  const std::vector<double> d_gt = nn_distances(gt.points, tp);
  auto within = [&](const std::vector<double>& d) {
    return static_cast<double>(std::count_if(d.begin(), d.end(),
                                             [&](double x) { return x <= tau; })) /
           static_cast<double>(d.size());
  };
  EvalResult r;
  r.precision = within(d_pred);
  r.recall = within(d_gt);
  r.f1 = r.precision + r.recall > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  r.chamfer = 0.5 * (mean(d_pred) + mean(d_gt));
  r.tau = tau;
  r.pred_points = pred.size();
  r.gt_points = gt.size();
  return r;
}

double default_tau(const PointCloud& gt) {
  if (gt.crop) return 0.01 * gt.crop->diagonal();
  Aabb b;
  for (const Vec3& p : gt.points) b.extend(p);
  return 0.01 * b.diagonal();
}

BiasReport bias_experiment(const TriangleMesh& mesh, const PointCloud& gt, double tau,
                           std::size_t uniform_count, std::uint64_t seed) {
  BiasReport r;
  const TriangleMesh fine = subdivide_midpoint(mesh);
  const PointCloud legacy_a = legacy_point_cloud(mesh, gt.crop);
  const PointCloud legacy_b = legacy_point_cloud(fine, gt.crop);
  r.legacy_points_before = legacy_a.size();
  r.legacy_points_after = legacy_b.size();
  r.legacy_before = f1_at(legacy_a, gt, tau);
  r.legacy_after = f1_at(legacy_b, gt, tau);
  r.uniform_before = f1_at(uniform_sample(mesh, uniform_count, gt.crop, seed), gt, tau);
  r.uniform_after = f1_at(uniform_sample(fine, uniform_count, gt.crop, seed), gt, tau);
  r.legacy_before.protocol = r.legacy_after.protocol = Protocol::kLegacy;
  r.uniform_before.protocol = r.uniform_after.protocol = Protocol::kUniform;
  return r;
}

}  // namespace gwrap
