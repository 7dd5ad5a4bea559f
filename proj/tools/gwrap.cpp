// Command line front end for the gwrap library.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gwrap/config.hpp"
#include "gwrap/error.hpp"
#include "gwrap/evalkit.hpp"
#include "gwrap/fields.hpp"
#include "gwrap/fixtures.hpp"
#include "gwrap/io.hpp"
#include "gwrap/meshing.hpp"
#include "gwrap/render.hpp"
#include "gwrap/rng.hpp"
#include "gwrap/wrap.hpp"

using namespace gwrap;

namespace {

constexpr int kUsageExit = 2;
constexpr int kToleranceExit = 3;

std::vector<double> parse_numbers(const std::string& text, std::size_t expected,
                                  const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, std::string(what) + ": bad number '" + item + "'");
    }
  }
  if (out.size() != expected)
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + ": expected " +
                                                 std::to_string(expected) + " comma-separated values");
  return out;
}

std::optional<Aabb> parse_box(const std::string& text, const char* what) {
  if (text.empty()) return std::nullopt;
  const auto v = parse_numbers(text, 6, what);
  Aabb box{Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5])};
  if (box.empty()) throw Error(ErrorCode::kInvalidArgument, std::string(what) + ": empty box");
  return box;
}

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;

  RunConfig load() const {
    RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (seed) c.seed = *seed;
    c.apply_seed();
    return c;
  }
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config_path, "RunConfig JSON file");
  cmd->add_option("--seed", common.seed, "Overrides the config seed");
}

GaussianScene open_scene(const std::string& path, const RunConfig& config) {
  GaussianScene scene = load_scene(path, config.scene);
  if (config.vacancy_camera_subset > 0)
    scene.restrict_vacancy_cameras(config.vacancy_camera_subset,
                                   split_seed(config.seed, streams::kVacancySubset));
  return scene;
}

std::vector<Vec3> read_points(const std::string& path) {
  const std::string ext = std::filesystem::path(path).extension().string();
  if (ext == ".ply") return load_point_cloud(path).points;
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::vector<Vec3> pts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    for (char& ch : line)
      if (ch == ',') ch = ' ';
    std::istringstream ss(line);
    Vec3 p;
    if (!(ss >> p.x())) continue;
    if (!(ss >> p.y() >> p.z()))
      throw Error(ErrorCode::kParseError, path + ":" + std::to_string(lineno) + ": need x y z");
    pts.push_back(p);
  }
  return pts;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path + " for writing");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_limit();
  CLI::App app{"gwrap: oriented Gaussian fields, wrapping, meshing and evaluation"};
  app.require_subcommand(1);

  // fixture
  auto* fixture = app.add_subcommand("fixture", "Write a synthetic scene");
  std::string fx_kind, fx_out, fx_gt;
  std::size_t fx_gt_count = 100000;
  FixtureParams fx;
  std::uint64_t fx_seed = 0;
  fixture->add_option("--kind", fx_kind, "sphere_shell | plane_patch | two_plane | cube_shell")
      ->required();
  fixture->add_option("--out", fx_out, "Scene file")->required();
  fixture->add_option("--radius", fx.radius);
  fixture->add_option("--count", fx.count);
  fixture->add_option("--cameras", fx.cameras);
  fixture->add_option("--width", fx.width);
  fixture->add_option("--height", fx.height);
  fixture->add_option("--fov", fx.fov_deg, "Vertical field of view in degrees");
  fixture->add_option("--camera-distance", fx.camera_distance);
  fixture->add_option("--spacing-factor", fx.spacing_factor);
  fixture->add_option("--thickness-ratio", fx.thickness_ratio);
  fixture->add_option("--opacity", fx.opacity);
  fixture->add_option("--normal-sign", fx.normal_sign);
  fixture->add_option("--tilt", fx.tilt_deg, "Plane tilt in degrees");
  fixture->add_option("--gap", fx.gap);
  fixture->add_flag("--back-camera", fx.back_camera);
  fixture->add_option("--gt-out", fx_gt, "Also write analytic surface samples (PLY)");
  fixture->add_option("--gt-count", fx_gt_count);
  fixture->add_option("--seed", fx_seed, "Seed for the surface samples");

  // render
  auto* render = app.add_subcommand("render", "Render color, alpha, depth and normal maps");
  Common render_common;
  std::string render_scene, render_out;
  int render_camera = 0;
  add_common(render, render_common);
  render->add_option("--scene", render_scene)->required();
  render->add_option("--camera-index", render_camera)->required();
  render->add_option("--out", render_out, "Output directory")->required();

  // fields
  auto* fields = app.add_subcommand("fields", "Sample vacancy, vector and normal fields");
  Common fields_common;
  std::string fields_scene, fields_points, fields_grid, fields_out;
  add_common(fields, fields_common);
  fields->add_option("--scene", fields_scene)->required();
  auto* points_opt = fields->add_option("--points", fields_points, "PLY or x,y,z text file");
  auto* grid_opt = fields->add_option("--grid", fields_grid, "NX,NY,NZ over the scene bounds");
  points_opt->excludes(grid_opt);
  fields->add_option("--out", fields_out, ".csv table or .gwmp raw floats")->required();

  // verify equivalence
  auto* verify = app.add_subcommand("verify", "Consistency checks");
  verify->require_subcommand(1);
  auto* equivalence =
      verify->add_subcommand("equivalence", "Alpha compositing vs ray-marched color");
  Common verify_common;
  std::string verify_scene;
  int verify_rays = 500;
  add_common(equivalence, verify_common);
  equivalence->add_option("--scene", verify_scene)->required();
  equivalence->add_option("--rays", verify_rays);

  // wrap
  auto* wrap = app.add_subcommand("wrap", "Optimize Gaussian orientations");
  Common wrap_common;
  std::string wrap_scene, wrap_out, wrap_report;
  bool wrap_randomize = false;
  add_common(wrap, wrap_common);
  wrap->add_option("--scene", wrap_scene)->required();
  wrap->add_option("--out", wrap_out)->required();
  wrap->add_option("--report", wrap_report, "Loss trace CSV (default: <out>.csv)");
  wrap->add_flag("--randomize", wrap_randomize, "Randomize orientations first");

  // mesh
  auto* mesh = app.add_subcommand("mesh", "Extract a triangle mesh");
  std::string mesh_method, mesh_scene, mesh_out, mesh_roi;
  Common mesh_common;
  add_common(mesh, mesh_common);
  mesh->add_option("method", mesh_method, "mtet | pam")
      ->required()
      ->check(CLI::IsMember({"mtet", "pam"}));
  mesh->add_option("--scene", mesh_scene)->required();
  mesh->add_option("--roi", mesh_roi, "x0,y0,z0,x1,y1,z1 (pam)");
  mesh->add_option("--out", mesh_out, ".obj or .ply")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Score a mesh against a ground-truth cloud");
  std::string eval_protocol, eval_pred, eval_gt, eval_out, eval_scene, eval_crop;
  std::optional<double> eval_tau;
  std::optional<std::size_t> eval_count;
  Common eval_common;
  add_common(eval, eval_common);
  eval->add_option("protocol", eval_protocol, "uniform | virtual | legacy")
      ->required()
      ->check(CLI::IsMember({"uniform", "virtual", "legacy"}));
  eval->add_option("--pred", eval_pred, "Predicted mesh")->required();
  eval->add_option("--gt", eval_gt, "Ground-truth PLY cloud")->required();
  eval->add_option("--tau", eval_tau, "Distance threshold (default 1% of the bounds)");
  eval->add_option("--out", eval_out, "JSON result (default stdout)");
  eval->add_option("--scene", eval_scene, "Scene whose cameras drive the virtual scan");
  eval->add_option("--crop", eval_crop, "x0,y0,z0,x1,y1,z1");
  eval->add_option("--count", eval_count, "Uniform sample count");

  // bias
  auto* bias = app.add_subcommand("bias", "Legacy vs uniform score under subdivision");
  std::string bias_pred, bias_gt, bias_out, bias_crop;
  std::optional<double> bias_tau;
  std::optional<std::size_t> bias_count;
  Common bias_common;
  add_common(bias, bias_common);
  bias->add_option("--pred", bias_pred)->required();
  bias->add_option("--gt", bias_gt)->required();
  bias->add_option("--tau", bias_tau);
  bias->add_option("--crop", bias_crop, "x0,y0,z0,x1,y1,z1");
  bias->add_option("--count", bias_count);
  bias->add_option("--out", bias_out, "JSON report (default stdout)");

  // config
  auto* config = app.add_subcommand("config", "Configuration helpers");
  config->require_subcommand(1);
  auto* dump = config->add_subcommand("dump", "Print the configuration with all defaults");
  std::string dump_in, dump_out;
  dump->add_option("--config", dump_in, "Load this file first");
  dump->add_option("--out", dump_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsageExit;
  }

  try {
    if (*fixture) {
      const FixtureKind kind = parse_fixture_kind(fx_kind);
      save_scene(make_fixture(kind, fx), fx_out);
      if (!fx_gt.empty())
        save_point_cloud(fixture_surface_samples(kind, fx, fx_gt_count, fx_seed), fx_gt);
    } else if (*render) {
      const RunConfig cfg = render_common.load();
      const GaussianScene scene = open_scene(render_scene, cfg);
      if (render_camera < 0 || static_cast<std::size_t>(render_camera) >= scene.cameras().size())
        throw Error(ErrorCode::kInvalidArgument, "camera index out of range");
      write_render_outputs(render_maps(scene, scene.cameras()[render_camera], cfg.render),
                           render_out);
    } else if (*fields) {
      const RunConfig cfg = fields_common.load();
      const GaussianScene scene = open_scene(fields_scene, cfg);
      std::vector<Vec3> pts;
      if (!fields_points.empty()) {
        pts = read_points(fields_points);
      } else if (!fields_grid.empty()) {
        const auto n = parse_numbers(fields_grid, 3, "--grid");
        const Aabb& b = scene.bbox();
        const int nx = static_cast<int>(n[0]), ny = static_cast<int>(n[1]), nz = static_cast<int>(n[2]);
        if (nx < 1 || ny < 1 || nz < 1 || b.empty())
          throw Error(ErrorCode::kInvalidArgument, "--grid needs positive counts and a non-empty scene");
        auto axis = [&](int i, int count, int k) {
          return count == 1 ? b.center()[k] : b.lo[k] + (b.hi[k] - b.lo[k]) * i / (count - 1);
        };
        for (int k = 0; k < nz; ++k)
          for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) pts.emplace_back(axis(i, nx, 0), axis(j, ny, 1), axis(k, nz, 2));
      } else {
        throw Error(ErrorCode::kInvalidArgument, "fields needs --points or --grid");
      }
      std::vector<FieldSample> samples(pts.size());
#pragma omp parallel for schedule(dynamic, 64)
      for (long long i = 0; i < static_cast<long long>(pts.size()); ++i)
        samples[i] = field_sample(scene, pts[i], cfg.neighbors, cfg.vector_zero_eps);
      if (std::filesystem::path(fields_out).extension() == ".gwmp") {
        std::vector<float> data;
        for (std::size_t i = 0; i < pts.size(); ++i) {
          const FieldSample& s = samples[i];
          for (double v : {pts[i].x(), pts[i].y(), pts[i].z(), s.vacancy, s.occupancy, s.vector.x(),
                           s.vector.y(), s.vector.z(), s.normal.x(), s.normal.y(), s.normal.z(),
                           static_cast<double>(s.support_count)})
            data.push_back(static_cast<float>(v));
        }
        write_raw_map(fields_out, static_cast<int>(pts.size()), 1, 12, data);
      } else {
        std::ostringstream out;
        out.precision(17);
        out << "x,y,z,vacancy,occupancy,vx,vy,vz,nx,ny,nz,support_count\n";
        for (std::size_t i = 0; i < pts.size(); ++i) {
          const FieldSample& s = samples[i];
          out << pts[i].x() << ',' << pts[i].y() << ',' << pts[i].z() << ',' << s.vacancy << ','
              << s.occupancy << ',' << s.vector.x() << ',' << s.vector.y() << ',' << s.vector.z()
              << ',' << s.normal.x() << ',' << s.normal.y() << ',' << s.normal.z() << ','
              << s.support_count << '\n';
        }
        write_text(fields_out, out.str());
      }
    } else if (*verify) {
      const RunConfig cfg = verify_common.load();
      const GaussianScene scene = open_scene(verify_scene, cfg);
      if (scene.empty()) throw Error(ErrorCode::kInvalidArgument, "scene has no Gaussians");
      if (verify_rays < 1) throw Error(ErrorCode::kInvalidArgument, "--rays must be positive");
      // Rays start outside the padded bounds and aim at a random point near a
      // random Gaussian.
      const Aabb& b = scene.bbox();
      const double reach = b.diagonal() + 1.0;
      const double step = cfg.verify.step * scene.min_scale();
      double worst = 0.0;
      for (int r = 0; r < verify_rays; ++r) {
        Engine rng = make_engine(cfg.seed, streams::kFixture, static_cast<std::uint64_t>(r));
        const auto i = static_cast<std::size_t>(uniform01(rng) * scene.size()) % scene.size();
        const OrientedGaussian& g = scene.gaussian(i);
        Vec3 dir(normal01(rng), normal01(rng), normal01(rng));
        dir.normalize();
        const Vec3 jitter(normal01(rng), normal01(rng), normal01(rng));
        const Vec3 target = g.mean + g.rotation * g.scales.cwiseProduct(jitter);
        const Ray ray{target - reach * dir, dir};
        const Vec3 a = composite_ray(scene, ray, cfg.render).color;
        const Vec3 m = ray_march_color(scene, ray, step, cfg.render);
        worst = std::max(worst, (a - m).cwiseAbs().maxCoeff());
      }
      std::printf("max_abs_color_error %.9g tolerance %.9g rays %d\n", worst, cfg.verify.tolerance,
                  verify_rays);
      if (!(worst <= cfg.verify.tolerance)) return kToleranceExit;
    } else if (*wrap) {
      const RunConfig cfg = wrap_common.load();
      GaussianScene scene = open_scene(wrap_scene, cfg);
      if (wrap_randomize)
        scene = randomize_orientations(scene, split_seed(cfg.seed, streams::kWrapInit));
      const WrapResult result = optimize_normals(scene, cfg.wrap);
      save_scene(result.scene, wrap_out);
      write_report_csv(result.report, wrap_report.empty() ? wrap_out + ".csv" : wrap_report);
    } else if (*mesh) {
      RunConfig cfg = mesh_common.load();
      const GaussianScene scene = open_scene(mesh_scene, cfg);
      TriangleMesh out;
      if (mesh_method == "mtet") {
        IsoMesh iso = mesh_mtet_iso(scene, cfg.mtet.multi_pivot);
        out = std::move(iso.mesh);
      } else {
        if (!mesh_roi.empty()) cfg.pam.roi = parse_box(mesh_roi, "--roi");
        PamReport report;
        out = mesh_pam(scene, cfg.pam, &report);
        std::fprintf(stderr, "pam: rounds %d kept %zu removed %zu relabelled %zu\n", report.rounds,
                     report.kept, report.removed_total, report.relabelled);
      }
      const WatertightReport w = watertight_check(out);
      std::fprintf(stderr, "mesh: %zu vertices %zu faces closed %d boundary %zu non_manifold %zu\n",
                   out.vertices.size(), out.faces.size(), w.closed ? 1 : 0, w.boundary_edges,
                   w.non_manifold_edges);
      save_mesh(out, mesh_out);
    } else if (*eval) {
      const RunConfig cfg = eval_common.load();
      const TriangleMesh pred = load_mesh(eval_pred);
      PointCloud gt = load_point_cloud(eval_gt);
      gt.crop = parse_box(eval_crop, "--crop");
      if (gt.crop) {
        PointCloud cropped;
        cropped.crop = gt.crop;
        for (const Vec3& p : gt.points)
          if (gt.crop->contains(p)) cropped.points.push_back(p);
        gt = std::move(cropped);
      }
      const double tau = eval_tau ? *eval_tau : (cfg.eval.tau > 0.0 ? cfg.eval.tau : default_tau(gt));
      PointCloud sampled;
      Protocol protocol = Protocol::kUniform;
      if (eval_protocol == "uniform") {
        sampled = uniform_sample(pred, eval_count.value_or(cfg.eval.uniform_count), gt.crop, cfg.seed);
      } else if (eval_protocol == "legacy") {
        protocol = Protocol::kLegacy;
        sampled = legacy_point_cloud(pred, gt.crop);
      } else {
        protocol = Protocol::kVirtualScan;
        if (eval_scene.empty()) throw Error(ErrorCode::kNoCameras, "virtual scan needs --scene");
        const SceneData data = read_scene_data(eval_scene);
        sampled = virtual_scan(pred, data.cameras, gt.crop);
      }
      EvalResult result = f1_at(sampled, gt, tau);
      result.protocol = protocol;
      write_text(eval_out, to_json(result) + "\n");
    } else if (*bias) {
      const RunConfig cfg = bias_common.load();
      const TriangleMesh pred = load_mesh(bias_pred);
      PointCloud gt = load_point_cloud(bias_gt);
      gt.crop = parse_box(bias_crop, "--crop");
      const double tau = bias_tau ? *bias_tau : (cfg.eval.tau > 0.0 ? cfg.eval.tau : default_tau(gt));
      const BiasReport r =
          bias_experiment(pred, gt, tau, bias_count.value_or(cfg.eval.uniform_count), cfg.seed);
      std::ostringstream out;
      out.precision(17);
      out << "{\n  \"tau\": " << tau << ",\n  \"legacy_points_before\": " << r.legacy_points_before
          << ",\n  \"legacy_points_after\": " << r.legacy_points_after
          << ",\n  \"legacy_f1_before\": " << r.legacy_before.f1
          << ",\n  \"legacy_f1_after\": " << r.legacy_after.f1
          << ",\n  \"legacy_delta\": " << r.legacy_delta()
          << ",\n  \"uniform_f1_before\": " << r.uniform_before.f1
          << ",\n  \"uniform_f1_after\": " << r.uniform_after.f1
          << ",\n  \"uniform_delta\": " << r.uniform_delta() << "\n}\n";
      write_text(bias_out, out.str());
    } else if (*config) {
      const RunConfig cfg = dump_in.empty() ? RunConfig{} : load_config(dump_in);
      write_text(dump_out, dump_config(cfg));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << " (" << static_cast<int>(e.code())
              << "): " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
