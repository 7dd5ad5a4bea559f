#include "gwrap/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gwrap/error.hpp"

namespace gwrap {

double max_contribution_t(const Ray& ray, const Vec3& mean, const Mat3& precision) {
  const Vec3 pw = precision * ray.direction;
  const double a = ray.direction.dot(pw);
  return std::max(0.0, (mean - ray.origin).dot(pw) / a);
}

double max_contribution_t(const Ray& ray, const OrientedGaussian& g) {
  return max_contribution_t(ray, g.mean, covariance_of(g).precision);
}

namespace {

// log(1 - G_i) at the clamped point of maximum contribution, or 0 when the
// Gaussian is outside its support there.
double log_factor(const GaussianScene& scene, std::size_t i, const Ray& ray, double t) {
  const OrientedGaussian& g = scene.gaussian(i);
  const Mat3& p = scene.precision(i);
  const double s = std::min(t, max_contribution_t(ray, g.mean, p));
  const double m2 = mahalanobis_sq(p, g.mean, ray.at(s));
  if (m2 > scene.support_sq()) return 0.0;
  return std::log1p(-g.opacity * std::exp(-0.5 * m2));
}

// grad log(1 - G_i(x)) if x is inside the support of Gaussian i.
bool supported_gradient(const GaussianScene& scene, std::size_t i, const Vec3& x, Vec3& grad) {
  const OrientedGaussian& g = scene.gaussian(i);
  const Vec3 pd = scene.precision(i) * (x - g.mean);
  const double m2 = (x - g.mean).dot(pd);
  if (m2 > scene.support_sq()) return false;
  const double value = g.opacity * std::exp(-0.5 * m2);
  grad = (value / (1.0 - value)) * pd;
  return true;
}

bool facing(const GaussianScene& scene, std::size_t i, const Vec3& x) {
  return scene.normal(i).dot(x - scene.gaussian(i).mean) >= 0.0;
}

}  // namespace

double transmittance(const GaussianScene& scene, const Ray& ray, double t) {
  double log_t = 0.0;
  scene.for_each_on_ray(ray, 0.0, t, [&](std::size_t i) { log_t += log_factor(scene, i, ray, t); });
  return std::exp(log_t);
}

double attenuation(const GaussianScene& scene, const Vec3& x, const Vec3& w) {
  double sigma = 0.0;
  scene.for_each_at_point(x, [&](std::size_t i) {
    Vec3 grad;
    if (supported_gradient(scene, i, x, grad)) sigma += std::max(0.0, -w.dot(grad));
  });
  return sigma;
}

double oriented_attenuation(const GaussianScene& scene, const Vec3& x, const Vec3& w) {
  double sigma = 0.0;
  scene.for_each_at_point(x, [&](std::size_t i) {
    Vec3 grad;
    if (facing(scene, i, x) && supported_gradient(scene, i, x, grad))
      sigma += std::abs(w.dot(grad));
  });
  return sigma;
}

namespace {
Vec3 vector_field_impl(const GaussianScene& scene, const Vec3& x, int k, int* support) {
  Vec3 v = Vec3::Zero();
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "neighbor count must be at least 1");
  std::vector<std::size_t> idx = scene.nearest(x, static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  int count = 0;
  for (std::size_t i : idx) {
    Vec3 grad;
    if (!supported_gradient(scene, i, x, grad)) continue;
    ++count;
    if (facing(scene, i, x)) v += grad;
  }
  if (support) *support = count;
  return v;
}
}  // namespace

Vec3 vector_field(const GaussianScene& scene, const Vec3& x, int k) {
  return vector_field_impl(scene, x, k, nullptr);
}

Vec3 normal_field(const GaussianScene& scene, const Vec3& x, int k, double zero_eps) {
  const Vec3 v = vector_field(scene, x, k);
  const double len = v.norm();
  return len < zero_eps ? Vec3::Zero() : Vec3(v / len);
}

double vacancy_lower_bound(const GaussianScene& scene, const Vec3& x) {
  const auto& cams = scene.vacancy_cameras();
  if (cams.empty()) throw Error(ErrorCode::kNoCameras, "vacancy query needs at least one camera");

  // Nearest cameras first: they tend to give a high bound early, which lets
  // the remaining rays stop as soon as they fall below it.
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(cams.size());
  for (std::size_t c : cams) order.emplace_back((scene.cameras()[c].center - x).norm(), c);
  std::sort(order.begin(), order.end());

  double best_log = -std::numeric_limits<double>::infinity();
  for (const auto& [dist, c] : order) {
    Ray ray{scene.cameras()[c].center, Vec3::UnitZ()};
    if (dist > 0.0) ray.direction = (x - ray.origin) / dist;
    double log_t = 0.0;
    bool pruned = false;
    scene.for_each_on_ray(ray, 0.0, dist, [&](std::size_t i) {
      log_t += log_factor(scene, i, ray, dist);
      if (log_t < best_log) {
        pruned = true;
        return false;
      }
      return true;
    });
    if (!pruned) best_log = std::max(best_log, log_t);
    if (best_log == 0.0) break;
  }
  return std::exp(best_log);
}

FieldSample field_sample(const GaussianScene& scene, const Vec3& x, int k, double zero_eps) {
  FieldSample s;
  s.vector = vector_field_impl(scene, x, k, &s.support_count);
  const double len = s.vector.norm();
  if (len >= zero_eps) s.normal = s.vector / len;
  s.vacancy = scene.empty() ? 1.0 : vacancy_lower_bound(scene, x);
  s.occupancy = 1.0 - s.vacancy;
  return s;
}

}  // namespace gwrap
