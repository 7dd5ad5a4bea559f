#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gwrap/delaunay.hpp"
#include "gwrap/fields.hpp"
#include "gwrap/scene.hpp"

namespace gwrap {

struct PivotSet {
  enum class Kind : std::uint8_t { kCenter, kOffset };
  std::vector<Vec3> points;
  std::vector<Kind> kind;
  std::vector<std::size_t> gaussian;  // originating Gaussian per point
  std::size_t skipped = 0;            // Gaussians dropped for a vanishing normal
};

/// Two pivots per Gaussian: mu and mu + 3 s n, with s = normal_scale_along() and n
/// the unit oriented normal. With `multi` set, emits mu and mu +- {1,2,3} s n
/// instead (the dense variant used to demonstrate evaluation bias).
/// Gaussians with |oriented normal| < 1e-6 are skipped.
PivotSet generate_pivots(const GaussianScene& scene, bool multi = false);

/// Triangle mesh from marching tetrahedra together with, for every output
/// vertex, the tet edge it was interpolated on.
struct IsoMesh {
  TriangleMesh mesh;
  std::vector<Vec3> edge_inside;   // endpoint with value above iso
  std::vector<Vec3> edge_outside;  // endpoint with value at or below iso
};

/// Marching tetrahedra of per-vertex `values` at `iso`. A vertex counts as
/// inside when its value exceeds iso. Edge vertices are shared through a
/// canonical edge key; triangles face the low-value side.
IsoMesh marching_tetrahedra(const TetMesh& tets, const std::vector<double>& values, double iso);

/// Bisects each vertex along its edge on occupancy 1 - vacancy_lower_bound until
/// |occ - 0.5| < tol or `max_iterations` halvings. Connectivity is untouched.
void refine_to_isosurface(IsoMesh& iso, const GaussianScene& scene, double tol = 1e-3,
                          int max_iterations = 30);

/// Pivots -> occupancy -> Delaunay -> marching tetrahedra -> refinement.
TriangleMesh mesh_mtet(const GaussianScene& scene, bool multi_pivot = false);
/// Same, keeping the per-vertex edges.
IsoMesh mesh_mtet_iso(const GaussianScene& scene, bool multi_pivot = false);

struct PamConfig {
  int samples = 20000;
  int newton_steps = 10;
  double eps = 0.1;
  int samples_per_tet = 8;
  int max_rounds = 5;
  int neighbors = kDefaultFieldNeighbors;
  std::uint64_t seed = 0;
  std::optional<Aabb> roi;
};

/// Throws kBadParams on out-of-range values.
void validate(const PamConfig& config);

/// `count` points on `mesh`, choosing faces with probability proportional to
/// area / distance from the face centroid to the nearest camera center, and a
/// uniform barycentric point inside each chosen face. With an ROI, points
/// outside it are redrawn (up to 100x count attempts).
std::vector<Vec3> pam_sample_faces(const TriangleMesh& mesh,
                                   const std::vector<PinholeCamera>& cameras,
                                   std::size_t count, std::uint64_t seed,
                                   const std::optional<Aabb>& roi = std::nullopt);

/// One Newton update toward v = 0.5 along the vector field: x += (0.5 - v) / 2 *
/// grad v / |grad v|^2 with grad v = v V. Points with a vanishing field stay.
Vec3 pam_newton_step(const GaussianScene& scene, const Vec3& x,
                     int k = kDefaultFieldNeighbors);

std::vector<Vec3> pam_newton_project(const std::vector<Vec3>& points,
                                     const GaussianScene& scene, int steps,
                                     int k = kDefaultFieldNeighbors);

struct FilterResult {
  std::vector<Vec3> kept;
  std::size_t removed = 0;
};

/// Keeps points with |0.5 - v(x)| <= eps, in input order.
FilterResult pam_filter(const std::vector<Vec3>& points, const GaussianScene& scene,
                        double eps);

/// Per tet: 1 (inside) when the median vacancy of `samples_per_tet` uniform
/// interior samples is below 0.5, else 0.
std::vector<std::uint8_t> pam_classify_tets(const TetMesh& tets, const GaussianScene& scene,
                                            int samples_per_tet, std::uint64_t seed);

/// Faces between inside and outside tets (hull faces count as outside),
/// oriented from the inside tet outward. Unused vertices are dropped.
/// Relabels outside tets as inside around every edge that would otherwise be
/// shared by more than two extracted faces, until none is left. Returns the
/// number of relabelled tets.
std::size_t pam_repair_labels(const TetMesh& tets, std::vector<std::uint8_t>& inside);

TriangleMesh pam_extract(const TetMesh& tets, const std::vector<std::uint8_t>& inside);

struct PamReport {
  int rounds = 0;
  std::size_t kept = 0;
  std::size_t removed_total = 0;
  std::size_t relabelled = 0;
};

TriangleMesh mesh_pam(const GaussianScene& scene, const PamConfig& config,
                      PamReport* report = nullptr);

struct WatertightReport {
  bool closed = false;
  std::size_t boundary_edges = 0;
  std::size_t non_manifold_edges = 0;
  std::size_t inconsistent_edges = 0;  // shared by two faces with the same direction
};

WatertightReport watertight_check(const TriangleMesh& mesh);

}  // namespace gwrap
