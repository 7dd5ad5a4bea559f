#pragma once

#include <cstdint>
#include <vector>

#include "gwrap/gaussian.hpp"
#include "gwrap/spatial.hpp"
#include "gwrap/types.hpp"

namespace gwrap {

struct SceneOptions {
  double alpha_max = kDefaultAlphaMax;
  double support_sigma = kDefaultSupportSigma;
};

/// Gaussians, training cameras and the acceleration structures built over them.
///
/// Geometry (means, scales, rotations, opacities) is fixed at construction.
/// Orientations can be edited in place with set_orientation(); anything else
/// requires building a new scene.
class GaussianScene {
 public:
  GaussianScene() = default;
  GaussianScene(std::vector<OrientedGaussian> gaussians, std::vector<PinholeCamera> cameras,
                SceneOptions options = {});

  std::size_t size() const { return gaussians_.size(); }
  bool empty() const { return gaussians_.empty(); }
  const std::vector<OrientedGaussian>& gaussians() const { return gaussians_; }
  const OrientedGaussian& gaussian(std::size_t i) const { return gaussians_[i]; }
  const std::vector<PinholeCamera>& cameras() const { return cameras_; }
  const SceneOptions& options() const { return options_; }

  /// Cached Sigma^-1 of Gaussian i.
  const Mat3& precision(std::size_t i) const { return precision_[i]; }
  /// Cached oriented_normal() of Gaussian i.
  const Vec3& normal(std::size_t i) const { return normal_[i]; }
  /// Squared Mahalanobis radius of the support cutoff.
  double support_sq() const { return options_.support_sigma * options_.support_sigma; }
  /// Axis-aligned box of the support ellipsoid of Gaussian i.
  const Aabb& support_box(std::size_t i) const { return support_bvh_.box(i); }

  /// Bounds of all means padded by 3x the largest scale.
  const Aabb& bbox() const { return bbox_; }
  double max_scale() const { return max_scale_; }
  double min_scale() const { return min_scale_; }

  /// Indices of the k Gaussians with means closest to x, by (distance, index).
  std::vector<std::size_t> nearest(const Vec3& x, std::size_t k) const;

  /// Calls f(i) for candidate Gaussians whose support box meets the ray segment.
  template <typename F>
  void for_each_on_ray(const Ray& ray, double tmin, double tmax, F&& f) const {
    support_bvh_.for_each_on_ray(ray, tmin, tmax, std::forward<F>(f));
  }

  /// Calls f(i) for candidate Gaussians whose support box contains x.
  template <typename F>
  void for_each_at_point(const Vec3& x, F&& f) const {
    support_bvh_.for_each_containing(x, std::forward<F>(f));
  }

  /// Replaces the orientation parameters of Gaussian i. Throws kInvalidArgument
  /// for a zero direction.
  void set_orientation(std::size_t i, double normal_sign, const Vec3& normal_dir);

  /// Cameras consulted by vacancy_lower_bound().
  const std::vector<std::size_t>& vacancy_cameras() const { return vacancy_cameras_; }
  /// Restricts vacancy queries to a fixed random subset of `count` cameras.
  /// A count of 0 (or >= camera count) restores the full set.
  void restrict_vacancy_cameras(std::size_t count, std::uint64_t seed);

 private:
  std::vector<OrientedGaussian> gaussians_;
  std::vector<PinholeCamera> cameras_;
  SceneOptions options_;
  std::vector<Mat3> precision_;
  std::vector<Vec3> normal_;
  Bvh support_bvh_;
  KdTree mean_index_;
  Aabb bbox_;
  double max_scale_ = 0.0;
  double min_scale_ = 0.0;
  std::vector<std::size_t> vacancy_cameras_;
};

}  // namespace gwrap
