#include "gwrap/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gwrap/error.hpp"
#include "gwrap/rng.hpp"

namespace gwrap {

GaussianScene::GaussianScene(std::vector<OrientedGaussian> gaussians,
                             std::vector<PinholeCamera> cameras, SceneOptions options)
    : gaussians_(std::move(gaussians)), cameras_(std::move(cameras)), options_(options) {
  if (!(options_.alpha_max > 0.0 && options_.alpha_max < 1.0))
    throw Error(ErrorCode::kInvalidArgument, "alpha_max must lie in (0, 1)");
  if (!(options_.support_sigma > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "support_sigma must be positive");
  for (const auto& c : cameras_) validate(c);

  const std::size_t n = gaussians_.size();
  precision_.resize(n);
  normal_.resize(n);
  std::vector<Aabb> boxes(n);
  std::vector<Vec3> means(n);
  min_scale_ = n ? std::numeric_limits<double>::infinity() : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const OrientedGaussian& g = gaussians_[i];
    validate(g, options_.alpha_max);
    const Covariance cov = covariance_of(g);
    precision_[i] = cov.precision;
    normal_[i] = oriented_normal(g);
    const Vec3 half = options_.support_sigma * cov.sigma.diagonal().cwiseSqrt();
    boxes[i].lo = g.mean - half;
    boxes[i].hi = g.mean + half;
    means[i] = g.mean;
    max_scale_ = std::max(max_scale_, g.scales.maxCoeff());
    min_scale_ = std::min(min_scale_, g.scales.minCoeff());
    bbox_.extend(g.mean);
  }
  if (n) {
    bbox_.lo.array() -= 3.0 * max_scale_;
    bbox_.hi.array() += 3.0 * max_scale_;
  }
  support_bvh_ = Bvh(std::move(boxes));
  mean_index_ = KdTree(std::move(means));
  vacancy_cameras_.resize(cameras_.size());
  std::iota(vacancy_cameras_.begin(), vacancy_cameras_.end(), std::size_t{0});
}

std::vector<std::size_t> GaussianScene::nearest(const Vec3& x, std::size_t k) const {
  std::vector<std::size_t> out;
  for (const auto& [idx, d2] : mean_index_.knn(x, k)) out.push_back(idx);
  return out;
}

void GaussianScene::set_orientation(std::size_t i, double normal_sign, const Vec3& normal_dir) {
  if (!std::isfinite(normal_sign) || !normal_dir.allFinite() || normal_dir.norm() <= 0.0)
    throw Error(ErrorCode::kInvalidArgument, "invalid orientation parameters");
  gaussians_[i].normal_sign = normal_sign;
  gaussians_[i].normal_dir = normal_dir;
  normal_[i] = oriented_normal(gaussians_[i]);
}

void GaussianScene::restrict_vacancy_cameras(std::size_t count, std::uint64_t seed) {
  vacancy_cameras_.resize(cameras_.size());
  std::iota(vacancy_cameras_.begin(), vacancy_cameras_.end(), std::size_t{0});
  if (count == 0 || count >= cameras_.size()) return;
  Engine rng = make_engine(seed, streams::kVacancySubset);
  // Partial Fisher-Yates with our own uniform draw for portability.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j =
        i + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(cameras_.size() - i));
    std::swap(vacancy_cameras_[i], vacancy_cameras_[j]);
  }
  vacancy_cameras_.resize(count);
  std::sort(vacancy_cameras_.begin(), vacancy_cameras_.end());
}

}  // namespace gwrap
