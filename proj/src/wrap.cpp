#include "gwrap/wrap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "gwrap/error.hpp"
#include "gwrap/rng.hpp"

namespace gwrap {

void validate(const WrapConfig& c) {
  auto fail = [](const char* what) { throw Error(ErrorCode::kBadParams, what); };
  if (c.iterations < 0) fail("iterations must be non-negative");
  if (!(c.lr_sign > 0.0) || !(c.lr_dir > 0.0)) fail("learning rates must be positive");
  if (!(c.loss_weight > 0.0)) fail("loss_weight must be positive");
  if (c.densify_every < 0) fail("densify_every must be non-negative");
  if (!(c.densify_fraction > 0.0 && c.densify_fraction <= 0.5))
    fail("densify_fraction must lie in (0, 0.5]");
  if (!(c.fd_step > 0.0)) fail("fd_step must be positive");
  if (c.views_per_step < 1) fail("views_per_step must be at least 1");
  if (!(c.min_weight >= 0.0)) fail("min_weight must be non-negative");
}

std::vector<double> per_gaussian_error(const GaussianScene& scene,
                                       const std::vector<PinholeCamera>& cameras,
                                       const RenderOptions& options) {
  std::vector<double> num(scene.size(), 0.0), den(scene.size(), 0.0);
  for (const PinholeCamera& cam : cameras) {
    const RenderedMaps maps = render_maps(scene, cam, options);
    const NormalLoss loss = normal_alignment_loss(maps, cam);
    for (int v = 0; v < cam.height; ++v) {
      for (int u = 0; u < cam.width; ++u) {
        const double l = loss.per_pixel[maps.pixel(u, v)];
        for (const Contribution& c : ray_contributions(scene, cam.pixel_ray(u, v), options)) {
          num[c.index] += c.weight * l;
          den[c.index] += c.weight;
        }
      }
    }
  }
  std::vector<double> err(scene.size(), 0.0);
  for (std::size_t i = 0; i < err.size(); ++i)
    if (den[i] > 0.0) err[i] = num[i] / den[i];
  return err;
}

GaussianScene densify_flip(const GaussianScene& scene, const std::vector<double>& errors,
                           double fraction) {
  if (!(fraction > 0.0 && fraction <= 0.5))
    throw Error(ErrorCode::kBadParams, "densify fraction must lie in (0, 0.5]");
  if (errors.size() != scene.size())
    throw Error(ErrorCode::kInvalidArgument, "one error value per Gaussian required");
  const std::size_t n = scene.size();
  std::vector<OrientedGaussian> gaussians = scene.gaussians();
  if (n == 0) return scene;
  const auto count = std::min<std::size_t>(
      n, std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * n))));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return errors[a] > errors[b]; });
  for (std::size_t k = 0; k < count; ++k) {
    OrientedGaussian clone = gaussians[order[k]];
    clone.normal_sign = -clone.normal_sign;
    gaussians.push_back(clone);
  }
  return GaussianScene(std::move(gaussians), scene.cameras(), scene.options());
}

namespace {

struct PixelRecord {
  std::vector<Contribution> raw;  // unordered candidates, weights unset
  Vec3 direction;
  Vec3 pseudo_normal;
};

// Everything the loss needs that does not depend on orientation.
std::vector<std::vector<PixelRecord>> build_cache(const GaussianScene& scene,
                                                  const std::vector<PinholeCamera>& cameras,
                                                  const RenderOptions& options) {
  std::vector<std::vector<PixelRecord>> cache(cameras.size());
  for (std::size_t c = 0; c < cache.size(); ++c) {
    const PinholeCamera& cam = cameras[c];
    const RenderedMaps maps = render_maps(scene, cam, options);
    const std::vector<Vec3> nd = depth_to_pseudo_normals(maps.depth, cam);
    for (int v = 0; v < cam.height; ++v) {
      for (int u = 0; u < cam.width; ++u) {
        const Vec3& n = nd[maps.pixel(u, v)];
        if (n.isZero(0.0)) continue;
        const Ray ray = cam.pixel_ray(u, v);
        cache[c].push_back({ray_candidates(scene, ray), ray.direction, n});
      }
    }
  }
  return cache;
}

// Ordered, weighted contributions under the current normals.
void weigh(const GaussianScene& scene, const PixelRecord& px, double early_stop,
           std::vector<Contribution>& out) {
  out = px.raw;
  sort_contributions(scene, px.direction, out);
  assign_weights(out, early_stop);
}

// Mean per-pixel loss over every cached pixel with a nonzero composited normal.
double mean_loss(const GaussianScene& scene,
                 const std::vector<std::vector<PixelRecord>>& cache, double early_stop) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& view : cache) {
#pragma omp parallel for reduction(+ : sum, count) schedule(static)
    for (long long p = 0; p < static_cast<long long>(view.size()); ++p) {
      std::vector<Contribution> list;
      weigh(scene, view[p], early_stop, list);
      Vec3 n = Vec3::Zero();
      for (const Contribution& c : list) n += c.weight * scene.normal(c.index);
      if (n.isZero(0.0)) continue;
      sum += 1.0 - n.dot(view[p].pseudo_normal);
      ++count;
    }
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

Vec3 normal_of(double sign, const Vec3& dir) { return std::tanh(sign) * dir / dir.norm(); }

// Gradient of loss_weight * sum_p (1 - N(p) . n_D(p)) over the pixels of `views`.
// The loss is linear in each n_i for a fixed compositing order, so dL/dn_i is
// exact and only the tanh / normalization map is differenced.
OrientationGradient gradient_from_cache(const GaussianScene& scene,
                                        const std::vector<std::vector<PixelRecord>>& cache,
                                        const std::vector<std::size_t>& views,
                                        const WrapConfig& config) {
  OrientationGradient out;
  out.sign.assign(scene.size(), 0.0);
  out.dir.assign(scene.size(), Vec3::Zero());
  out.weight.assign(scene.size(), 0.0);
  std::vector<Vec3> pull(scene.size(), Vec3::Zero());
  std::vector<Contribution> list;
  for (std::size_t view : views) {
    for (const PixelRecord& px : cache[view]) {
      weigh(scene, px, config.render.early_stop_T, list);
      Vec3 n = Vec3::Zero();
      for (const Contribution& c : list) n += c.weight * scene.normal(c.index);
      if (n.isZero(0.0)) continue;
      for (const Contribution& c : list) {
        pull[c.index] += c.weight * px.pseudo_normal;
        out.weight[c.index] += c.weight;
      }
    }
  }
  const double h = config.fd_step;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    if (out.weight[i] <= 0.0) continue;
    const OrientedGaussian& g = scene.gaussian(i);
    const Vec3 dl_dn = -config.loss_weight * pull[i];
    out.sign[i] = dl_dn.dot(normal_of(g.normal_sign + h, g.normal_dir) -
                            normal_of(g.normal_sign - h, g.normal_dir)) /
                  (2.0 * h);
    for (int a = 0; a < 3; ++a) {
      Vec3 dp = g.normal_dir, dm = g.normal_dir;
      dp[a] += h;
      dm[a] -= h;
      out.dir[i][a] =
          dl_dn.dot(normal_of(g.normal_sign, dp) - normal_of(g.normal_sign, dm)) / (2.0 * h);
    }
  }
  return out;
}

}  // namespace

OrientationGradient orientation_gradient(const GaussianScene& scene,
                                         const std::vector<PinholeCamera>& cameras,
                                         const WrapConfig& config) {
  validate(config);
  const auto cache = build_cache(scene, cameras, config.render);
  std::vector<std::size_t> views(cameras.size());
  std::iota(views.begin(), views.end(), std::size_t{0});
  return gradient_from_cache(scene, cache, views, config);
}

WrapResult optimize_normals(const GaussianScene& input, const WrapConfig& config) {
  validate(config);
  if (input.cameras().empty())
    throw Error(ErrorCode::kNoCameras, "normal optimization needs cameras");
  WrapResult result{input, {}};
  GaussianScene& scene = result.scene;
  if (config.iterations == 0) return result;

  const double early = config.render.early_stop_T;
  auto cache = build_cache(scene, scene.cameras(), config.render);
  const double initial = mean_loss(scene, cache, early);
  const std::size_t n_cams = scene.cameras().size();
  for (int it = 0; it < config.iterations; ++it) {
    // Views for this step, drawn without replacement.
    Engine rng = make_engine(config.seed, streams::kWrapViews, static_cast<std::uint64_t>(it));
    std::vector<std::size_t> views(n_cams);
    std::iota(views.begin(), views.end(), std::size_t{0});
    const std::size_t n_views = std::min<std::size_t>(config.views_per_step, n_cams);
    for (std::size_t k = 0; k < n_views; ++k) {
      const std::size_t j =
          k + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n_cams - k));
      std::swap(views[k], views[j]);
    }

    views.resize(n_views);
    const OrientationGradient grad = gradient_from_cache(scene, cache, views, config);
    for (std::size_t i = 0; i < scene.size(); ++i) {
      if (grad.weight[i] <= config.min_weight) continue;
      const OrientedGaussian& g = scene.gaussian(i);
      Vec3 dir = g.normal_dir - config.lr_dir * grad.dir[i];
      if (dir.norm() <= 0.0) dir = g.normal_dir;
      scene.set_orientation(i, g.normal_sign - config.lr_sign * grad.sign[i], dir.normalized());
    }

    int clones = 0;
    if (config.densify_every > 0 && (it + 1) % config.densify_every == 0 &&
        it + 1 < config.iterations) {
      const std::size_t before = scene.size();
      scene = densify_flip(scene, per_gaussian_error(scene, scene.cameras(), config.render),
                           config.densify_fraction);
      clones = static_cast<int>(scene.size() - before);
      cache = build_cache(scene, scene.cameras(), config.render);
    }

    const double loss = mean_loss(scene, cache, early);
    result.report.loss.push_back(loss);
    result.report.clones_added.push_back(clones);
    if (initial > 0.0 && loss > 4.0 * initial)
      throw Error(ErrorCode::kDiverged, "normal alignment loss exceeded 4x its initial value");
  }
  result.report.error = per_gaussian_error(scene, scene.cameras(), config.render);
  return result;
}

GaussianScene randomize_orientations(const GaussianScene& scene, std::uint64_t seed) {
  std::vector<OrientedGaussian> gaussians = scene.gaussians();
  for (std::size_t i = 0; i < gaussians.size(); ++i) {
    Engine rng = make_engine(seed, streams::kWrapInit, i);
    gaussians[i].normal_sign = normal01(rng);
    Vec3 d;
    do {
      d = Vec3(normal01(rng), normal01(rng), normal01(rng));
    } while (d.norm() < 1e-6);
    gaussians[i].normal_dir = d.normalized();
  }
  return GaussianScene(std::move(gaussians), scene.cameras(), scene.options());
}

void write_report_csv(const WrapReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << "iteration,loss,clones_added\n";
  out.precision(17);
  for (std::size_t i = 0; i < report.loss.size(); ++i)
    out << i << ',' << report.loss[i] << ',' << report.clones_added[i] << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path);
}

}  // namespace gwrap
