#pragma once

#include <cstdint>
#include <string>

#include "gwrap/evalkit.hpp"
#include "gwrap/fields.hpp"
#include "gwrap/meshing.hpp"
#include "gwrap/render.hpp"
#include "gwrap/scene.hpp"
#include "gwrap/wrap.hpp"

namespace gwrap {

struct MtetConfig {
  bool multi_pivot = false;
  double refine_tol = 1e-3;
  int refine_iterations = 30;
};

struct EvalConfig {
  double tau = 0.0;  // 0 selects default_tau()
  std::size_t uniform_count = kDefaultUniformCount;
};

struct VerifyConfig {
  double tolerance = 5e-3;
  double step = 1e-3;  // ray-march step, in units of the smallest scale
};

/// Every tunable of the pipeline. A single `seed` drives all randomness; the
/// per-module seeds are derived from it by apply_seed().
struct RunConfig {
  std::uint64_t seed = 0;
  SceneOptions scene;
  std::size_t vacancy_camera_subset = 0;  // 0 uses every camera
  int neighbors = kDefaultFieldNeighbors;
  double vector_zero_eps = kDefaultVectorZeroEps;
  RenderOptions render;
  WrapConfig wrap;
  MtetConfig mtet;
  PamConfig pam;
  EvalConfig eval;
  VerifyConfig verify;

  /// Copies `seed` and the shared settings into the module configs.
  void apply_seed();
};

/// JSON text with every field present. Key order is fixed.
std::string dump_config(const RunConfig& config);

/// Parses JSON over the defaults. Missing keys keep their defaults; unknown
/// keys and wrong types throw kParseError, out-of-range values kBadParams.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
void validate(const RunConfig& config);

/// Caps the OpenMP worker pool at $GWRAP_THREADS when set to a positive
/// integer. Returns the resulting maximum thread count.
int apply_thread_limit();

}  // namespace gwrap
