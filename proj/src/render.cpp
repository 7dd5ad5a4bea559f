#include "gwrap/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gwrap/fields.hpp"

namespace gwrap {

std::vector<Contribution> ray_candidates(const GaussianScene& scene, const Ray& ray) {
  std::vector<Contribution> list;
  scene.for_each_on_ray(ray, 0.0, std::numeric_limits<double>::infinity(), [&](std::size_t i) {
    const OrientedGaussian& g = scene.gaussian(i);
    const double t = max_contribution_t(ray, g.mean, scene.precision(i));
    const double m2 = mahalanobis_sq(scene.precision(i), g.mean, ray.at(t));
    if (m2 > scene.support_sq()) return;
    list.push_back({i, t, g.opacity * std::exp(-0.5 * m2), 0.0});
  });
  return list;
}

void sort_contributions(const GaussianScene& scene, const Vec3& w,
                        std::vector<Contribution>& list) {
  std::sort(list.begin(), list.end(), [&](const Contribution& a, const Contribution& b) {
    if (a.t != b.t) return a.t < b.t;
    // Co-located primitives (flip clones) composite the ray-facing one first.
    const bool fa = scene.normal(a.index).dot(w) < 0.0;
    const bool fb = scene.normal(b.index).dot(w) < 0.0;
    if (fa != fb) return fa;
    return a.index < b.index;
  });
}

double assign_weights(std::vector<Contribution>& list, double early_stop_T) {
  double trans = 1.0;
  std::size_t n = 0;
  while (n < list.size()) {
    list[n].weight = list[n].peak * trans;
    trans *= 1.0 - list[n].peak;
    ++n;
    if (trans < early_stop_T) break;
  }
  list.resize(n);
  return trans;
}

std::vector<Contribution> ray_contributions(const GaussianScene& scene, const Ray& ray,
                                            const RenderOptions& options) {
  std::vector<Contribution> list = ray_candidates(scene, ray);
  sort_contributions(scene, ray.direction, list);
  assign_weights(list, options.early_stop_T);
  return list;
}

namespace {

double median_crossing(const GaussianScene& scene, const Ray& ray, double hi) {
  // T is non-increasing but steps down where a support ellipsoid begins. If
  // such a step straddles 0.5 the bisection closes in on the step instead.
  double lo = 0.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double tm = transmittance(scene, ray, mid);
    if (std::abs(tm - 0.5) < 1e-6) return mid;
    if (tm > 0.5) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

RayResult composite_ray(const GaussianScene& scene, const Ray& ray,
                        const RenderOptions& options) {
  RayResult r;
  std::vector<Contribution> list = ray_contributions(scene, ray, options);
  double trans = 1.0;
  double median_hi = std::numeric_limits<double>::quiet_NaN();
  for (const Contribution& c : list) {
    r.color += c.weight * scene.gaussian(c.index).color;
    r.alpha += c.weight;
    r.normal += c.weight * scene.normal(c.index);
    trans *= 1.0 - c.peak;
    if (std::isnan(median_hi) && trans <= 0.5) median_hi = c.t;
  }
  r.color += trans * options.background;
  r.median_t = std::isnan(median_hi) ? median_hi : median_crossing(scene, ray, median_hi);
  return r;
}

RenderedMaps render_maps(const GaussianScene& scene, const PinholeCamera& camera,
                         const RenderOptions& options) {
  RenderedMaps maps;
  maps.width = camera.width;
  maps.height = camera.height;
  const std::size_t n = static_cast<std::size_t>(camera.width) * camera.height;
  maps.color.assign(n, Vec3::Zero());
  maps.alpha.assign(n, 0.0);
  maps.depth.assign(n, 0.0);
  maps.normal.assign(n, Vec3::Zero());
#pragma omp parallel for schedule(dynamic, 16)
  for (long long p = 0; p < static_cast<long long>(n); ++p) {
    const int u = static_cast<int>(p % camera.width);
    const int v = static_cast<int>(p / camera.width);
    const RayResult r = composite_ray(scene, camera.pixel_ray(u, v), options);
    maps.color[p] = r.color;
    maps.alpha[p] = r.alpha;
    maps.depth[p] = r.median_t;
    maps.normal[p] = r.normal;
  }
  return maps;
}

Vec3 ray_march_color(const GaussianScene& scene, const Ray& ray, double step,
                     const RenderOptions& options) {
  struct Interval {
    double t0, t1;
    std::size_t index;
  };
  std::vector<Interval> spans;
  scene.for_each_on_ray(ray, 0.0, std::numeric_limits<double>::infinity(), [&](std::size_t i) {
    const Vec3 d = ray.origin - scene.gaussian(i).mean;
    const Mat3& p = scene.precision(i);
    const double a = ray.direction.dot(p * ray.direction);
    const double b = ray.direction.dot(p * d);
    const double c = d.dot(p * d) - scene.support_sq();
    const double disc = b * b - a * c;
    if (disc <= 0.0) return;
    const double root = std::sqrt(disc);
    const double t0 = std::max(0.0, (-b - root) / a);
    const double t1 = (-b + root) / a;
    if (t1 > t0) spans.push_back({t0, t1, i});
  });
  std::sort(spans.begin(), spans.end(),
            [](const Interval& a, const Interval& b) { return a.t0 < b.t0; });

  Vec3 color = Vec3::Zero();
  double optical_depth = 0.0;
  std::size_t s = 0;
  while (s < spans.size()) {
    // Merge overlapping support intervals into one integration range.
    double t0 = spans[s].t0, t1 = spans[s].t1;
    std::vector<std::size_t> members{spans[s].index};
    for (++s; s < spans.size() && spans[s].t0 <= t1; ++s) {
      t1 = std::max(t1, spans[s].t1);
      members.push_back(spans[s].index);
    }
    const int n = std::max(1, static_cast<int>(std::ceil((t1 - t0) / step)));
    const double h = (t1 - t0) / n;
    double prev_sigma = 0.0;
    Vec3 prev_f = Vec3::Zero();
    for (int k = 0; k <= n; ++k) {
      const Vec3 x = ray.at(t0 + k * h);
      double sigma = 0.0;
      double best_m2 = std::numeric_limits<double>::infinity();
      Vec3 c = Vec3::Zero();
      for (std::size_t i : members) {
        const OrientedGaussian& g = scene.gaussian(i);
        const Vec3 pd = scene.precision(i) * (x - g.mean);
        const double m2 = (x - g.mean).dot(pd);
        if (m2 > scene.support_sq()) continue;
        const double value = g.opacity * std::exp(-0.5 * m2);
        const double term = std::max(0.0, -ray.direction.dot(value / (1.0 - value) * pd));
        if (term <= 0.0) continue;
        sigma += term;
        if (m2 < best_m2) {
          best_m2 = m2;
          c = g.color;
        }
      }
      if (k > 0) optical_depth += 0.5 * h * (prev_sigma + sigma);
      const Vec3 f = sigma * std::exp(-optical_depth) * c;
      if (k > 0) color += 0.5 * h * (prev_f + f);
      prev_sigma = sigma;
      prev_f = f;
    }
  }
  return color + std::exp(-optical_depth) * options.background;
}

std::vector<Vec3> depth_to_pseudo_normals(const std::vector<double>& depth,
                                          const PinholeCamera& camera) {
  const int w = camera.width, h = camera.height;
  std::vector<Vec3> out(depth.size(), Vec3::Zero());
  auto at = [&](int u, int v) { return depth[static_cast<std::size_t>(v) * w + u]; };
  auto finite = [&](int u, int v) {
    return u < 0 || v < 0 || u >= w || v >= h || std::isfinite(at(u, v));
  };
  auto point = [&](int u, int v) { return at(u, v) * camera.pixel_direction_camera(u, v); };
  for (int v = 0; v + 1 < h; ++v) {
    for (int u = 0; u + 1 < w; ++u) {
      if (!std::isfinite(at(u, v)) || !finite(u + 1, v) || !finite(u, v + 1) ||
          !finite(u - 1, v) || !finite(u, v - 1))
        continue;
      const Vec3 p = point(u, v);
      Vec3 n = (point(u + 1, v) - p).cross(point(u, v + 1) - p);
      const double len = n.norm();
      if (!(len > 0.0)) continue;
      n /= len;
      if (n.dot(p) > 0.0) n = -n;
      out[static_cast<std::size_t>(v) * w + u] = camera.rotation * n;
    }
  }
  return out;
}

NormalLoss normal_alignment_loss(const RenderedMaps& maps, const PinholeCamera& camera) {
  NormalLoss out;
  const std::vector<Vec3> nd = depth_to_pseudo_normals(maps.depth, camera);
  out.per_pixel.assign(nd.size(), 0.0);
  double sum = 0.0;
  for (std::size_t p = 0; p < nd.size(); ++p) {
    if (nd[p].isZero(0.0) || maps.normal[p].isZero(0.0)) continue;
    out.per_pixel[p] = 1.0 - maps.normal[p].dot(nd[p]);
    sum += out.per_pixel[p];
    ++out.contributing;
  }
  out.loss = out.contributing ? sum / static_cast<double>(out.contributing) : 0.0;
  return out;
}

NormalLoss normal_alignment_loss(const GaussianScene& scene, const PinholeCamera& camera,
                                 const RenderOptions& options) {
  return normal_alignment_loss(render_maps(scene, camera, options), camera);
}

}  // namespace gwrap
