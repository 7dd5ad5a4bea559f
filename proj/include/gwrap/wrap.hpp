#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gwrap/render.hpp"
#include "gwrap/scene.hpp"

namespace gwrap {

struct WrapConfig {
  int iterations = 200;
  double lr_sign = 0.05;
  double lr_dir = 0.02;
  double loss_weight = 0.05;  // lambda_N
  int densify_every = 50;     // 0 disables densification
  double densify_fraction = 0.05;
  double fd_step = 1e-3;
  int views_per_step = 4;
  double min_weight = 1e-4;  // Gaussians below this total blend weight get no update
  std::uint64_t seed = 0;
  RenderOptions render;
};

/// Throws kBadParams when a field is out of range.
void validate(const WrapConfig& config);

struct WrapReport {
  std::vector<double> loss;        // mean per-pixel loss over all cameras, per iteration
  std::vector<int> clones_added;   // per iteration, nonzero on densification steps
  std::vector<double> error;       // per-Gaussian error of the final scene
};

struct WrapResult {
  GaussianScene scene;
  WrapReport report;
};

/// Blend-weighted mean of the per-pixel alignment loss seen by each Gaussian
/// over `cameras`. Gaussians that never receive weight get 0.
std::vector<double> per_gaussian_error(const GaussianScene& scene,
                                       const std::vector<PinholeCamera>& cameras,
                                       const RenderOptions& options = {});

/// Appends flipped-sign clones of the round(fraction * N) highest-error
/// Gaussians (at least one). Ties go to the lower index.
GaussianScene densify_flip(const GaussianScene& scene, const std::vector<double>& errors,
                           double fraction);

struct OrientationGradient {
  std::vector<double> sign;    // dL / d normal_sign
  std::vector<Vec3> dir;       // dL / d normal_dir
  std::vector<double> weight;  // total blend weight over the contributing pixels
};

/// Gradient of loss_weight times the summed alignment loss over `cameras`,
/// by central differences of step fd_step on the orientation parameters.
OrientationGradient orientation_gradient(const GaussianScene& scene,
                                         const std::vector<PinholeCamera>& cameras,
                                         const WrapConfig& config);

/// Gradient descent on the alignment loss over normal_sign and normal_dir only.
/// Throws kNoCameras, kBadParams, or kDiverged when the loss exceeds 4x its
/// initial value.
WrapResult optimize_normals(const GaussianScene& scene, const WrapConfig& config);

/// Draws normal_sign ~ N(0, 1) and a uniform random normal_dir per Gaussian.
GaussianScene randomize_orientations(const GaussianScene& scene, std::uint64_t seed);

/// Writes "iteration,loss,clones_added" rows. Throws kIoError.
void write_report_csv(const WrapReport& report, const std::string& path);

}  // namespace gwrap
