#pragma once

#include <string>
#include <vector>

#include "gwrap/evalkit.hpp"
#include "gwrap/render.hpp"
#include "gwrap/scene.hpp"

namespace gwrap {

inline constexpr int kSceneFormatVersion = 1;

struct SceneData {
  std::vector<OrientedGaussian> gaussians;
  std::vector<PinholeCamera> cameras;
  bool has_camera_block = false;
};

/// Text scene format, every number written with 17 significant digits:
///
///   gwrap_scene 1
///   gaussians N
///   g mx my mz sx sy sz qw qx qy qz opacity sign dx dy dz r g b
///   cameras M
///   c fx fy cx cy width height r00 r01 r02 t0 r10 r11 r12 t1 r20 r21 r22 t2
///
/// The camera rows hold the world-from-camera transform [R | center].
/// Lines starting with '#' are ignored.
SceneData read_scene_data(const std::string& path);
void write_scene_data(const SceneData& data, const std::string& path);

/// Loads and builds a scene. A missing camera block only logs a warning.
GaussianScene load_scene(const std::string& path, const SceneOptions& options = {});
void save_scene(const GaussianScene& scene, const std::string& path);

/// Mesh output by extension: ".obj" (ASCII) or ".ply" (binary little endian).
void save_mesh(const TriangleMesh& mesh, const std::string& path);
/// Reads OBJ ("v" / "f" records, polygons fanned) or PLY (ascii or binary LE).
TriangleMesh load_mesh(const std::string& path);

/// Binary little-endian PLY with float64 vertices only.
void save_point_cloud(const PointCloud& cloud, const std::string& path);
/// Reads the vertex positions of any ascii or binary-LE PLY.
PointCloud load_point_cloud(const std::string& path);

/// 8-bit PNG. `channels` is 1 or 3; values are clamped to [0, 1].
void write_png(const std::string& path, int width, int height, int channels,
               const std::vector<float>& data);

/// Raw float32 map: "GWMP", uint32 width, height, channels, then row-major data.
void write_raw_map(const std::string& path, int width, int height, int channels,
                   const std::vector<float>& data);
struct RawMap {
  int width = 0, height = 0, channels = 0;
  std::vector<float> data;
};
RawMap read_raw_map(const std::string& path);

/// color.png, alpha.png, normal.png (mapped to [0,1]), depth.gwmp, normal.gwmp,
/// alpha.gwmp in `dir`.
void write_render_outputs(const RenderedMaps& maps, const std::string& dir);

std::string to_json(const EvalResult& result);

}  // namespace gwrap
