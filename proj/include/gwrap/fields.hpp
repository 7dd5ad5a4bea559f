#pragma once

#include "gwrap/scene.hpp"

namespace gwrap {

/// Neighbor count for vector and normal field queries.
inline constexpr int kDefaultFieldNeighbors = 32;
/// Below this vector-field magnitude the normal field is zero.
inline constexpr double kDefaultVectorZeroEps = 1e-8;

struct FieldSample {
  double vacancy = 1.0;
  double occupancy = 0.0;
  Vec3 vector = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
  int support_count = 0;
};

/// Clamped ray parameter of maximum Gaussian value:
/// max(0, (mu - o)^T P w / (w^T P w)).
double max_contribution_t(const Ray& ray, const Vec3& mean, const Mat3& precision);
double max_contribution_t(const Ray& ray, const OrientedGaussian& g);

/// Product over supported Gaussians of 1 - G_i(o + min(t, t_i*) w).
/// Accumulated in log space.
double transmittance(const GaussianScene& scene, const Ray& ray, double t);

/// Unoriented attenuation: sum of max(0, -w . grad log(1 - G_i(x))).
double attenuation(const GaussianScene& scene, const Vec3& x, const Vec3& w);

/// Oriented attenuation: sum of [n_i.(x - mu_i) >= 0] |w . grad log(1 - G_i(x))|.
double oriented_attenuation(const GaussianScene& scene, const Vec3& x, const Vec3& w);

/// Sum of oriented log-gradients over the k nearest Gaussians that pass the
/// support cutoff. Terms are added in ascending Gaussian index.
Vec3 vector_field(const GaussianScene& scene, const Vec3& x, int k = kDefaultFieldNeighbors);

/// Unit vector_field(), or zero when its norm is below `zero_eps`.
Vec3 normal_field(const GaussianScene& scene, const Vec3& x, int k = kDefaultFieldNeighbors,
                  double zero_eps = kDefaultVectorZeroEps);

/// Maximum transmittance reaching x over the scene's vacancy cameras.
/// Throws kNoCameras when the scene has none.
double vacancy_lower_bound(const GaussianScene& scene, const Vec3& x);

FieldSample field_sample(const GaussianScene& scene, const Vec3& x,
                         int k = kDefaultFieldNeighbors,
                         double zero_eps = kDefaultVectorZeroEps);

}  // namespace gwrap
