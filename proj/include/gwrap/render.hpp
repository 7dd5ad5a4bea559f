#pragma once

#include <vector>

#include "gwrap/scene.hpp"

namespace gwrap {

struct RenderOptions {
  double early_stop_T = 1e-4;
  Vec3 background = Vec3::Zero();
};

struct Contribution {
  std::size_t index = 0;
  double t = 0.0;      // point of maximum contribution along the ray
  double peak = 0.0;   // G_i at t
  double weight = 0.0; // peak times transmittance of everything in front
};

/// Depth-ordered contributions of a ray. Equal depths put the Gaussian whose
/// normal faces the ray first, then lower index.
std::vector<Contribution> ray_contributions(const GaussianScene& scene, const Ray& ray,
                                            const RenderOptions& options = {});

/// Unsorted contributions of every Gaussian whose support contains its point of
/// maximum contribution. Weights are left at zero.
std::vector<Contribution> ray_candidates(const GaussianScene& scene, const Ray& ray);

/// Sorts by depth with the tie rule of ray_contributions(), given the current
/// scene normals and ray direction w.
void sort_contributions(const GaussianScene& scene, const Vec3& w,
                        std::vector<Contribution>& list);

/// Fills in blend weights front to back and drops everything after the first
/// entry that brings transmittance below `early_stop_T`. Returns the final
/// transmittance.
double assign_weights(std::vector<Contribution>& list, double early_stop_T);

struct RayResult {
  Vec3 color = Vec3::Zero();
  double alpha = 0.0;
  double median_t = 0.0;  // NaN when transmittance never reaches 0.5
  Vec3 normal = Vec3::Zero();
};

RayResult composite_ray(const GaussianScene& scene, const Ray& ray,
                        const RenderOptions& options = {});

/// Row-major H x W maps. `depth` holds the median ray distance t, NaN where
/// alpha < 0.5; normals are in world space.
struct RenderedMaps {
  int width = 0, height = 0;
  std::vector<Vec3> color;
  std::vector<double> alpha;
  std::vector<double> depth;
  std::vector<Vec3> normal;

  std::size_t pixel(int u, int v) const { return static_cast<std::size_t>(v) * width + u; }
};

RenderedMaps render_maps(const GaussianScene& scene, const PinholeCamera& camera,
                         const RenderOptions& options = {});

/// Quadrature reference for composite_ray color: trapezoid integration of
/// sigma * T * c over the union of support intervals, with T itself integrated
/// from sigma. The color at a sample is that of the supported Gaussian with the
/// smallest Mahalanobis distance among those attenuating there.
Vec3 ray_march_color(const GaussianScene& scene, const Ray& ray, double step,
                     const RenderOptions& options = {});

/// World-space surface normals from a depth map (ray distances), by back-projecting
/// each pixel and its +x/+y neighbors. Pixels whose depth or any 4-neighbor is NaN,
/// and pixels on the last row/column, get zero.
std::vector<Vec3> depth_to_pseudo_normals(const std::vector<double>& depth,
                                          const PinholeCamera& camera);

struct NormalLoss {
  double loss = 0.0;  // mean over contributing pixels
  std::vector<double> per_pixel;
  std::size_t contributing = 0;
};

/// Per-pixel 1 - N(p) . n_D(p) between composited normals and depth pseudo-normals.
/// Pixels where either is zero contribute 0 and are excluded from the mean.
NormalLoss normal_alignment_loss(const GaussianScene& scene, const PinholeCamera& camera,
                                 const RenderOptions& options = {});
NormalLoss normal_alignment_loss(const RenderedMaps& maps, const PinholeCamera& camera);

}  // namespace gwrap
