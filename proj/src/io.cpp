#include "gwrap/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gwrap/error.hpp"

namespace gwrap {

namespace {

[[noreturn]] void parse_error(const std::string& path, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kParseError, path + ":" + std::to_string(line) + ": " + what);
}

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path + " for writing");
  return out;
}

std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  return in;
}

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

std::string lower_ext(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

}  // namespace

SceneData read_scene_data(const std::string& path) {
  std::ifstream in = open_in(path);
  SceneData data;
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      return true;
    }
    return false;
  };

  if (!next()) parse_error(path, lineno, "empty scene file");
  {
    std::istringstream ss(line);
    std::string magic;
    int version = 0;
    if (!(ss >> magic >> version) || magic != "gwrap_scene")
      parse_error(path, lineno, "missing 'gwrap_scene <version>' header");
    if (version != kSceneFormatVersion)
      throw Error(ErrorCode::kVersionMismatch, path + ": unsupported scene version " +
                                                   std::to_string(version));
  }

  auto read_count = [&](const char* keyword) -> long long {
    std::istringstream ss(line);
    std::string kw;
    long long n = -1;
    if (!(ss >> kw >> n) || kw != keyword || n < 0)
      parse_error(path, lineno, std::string("expected '") + keyword + " <count>'");
    return n;
  };

  if (!next()) parse_error(path, lineno, "missing gaussians block");
  const long long n_g = read_count("gaussians");
  for (long long i = 0; i < n_g; ++i) {
    if (!next()) parse_error(path, lineno, "truncated gaussian block");
    std::istringstream ss(line);
    std::string tag;
    double v[18];
    ss >> tag;
    for (double& x : v) ss >> x;
    if (tag != "g" || ss.fail())
      parse_error(path, lineno, "gaussian record " + std::to_string(i) + " is malformed");
    OrientedGaussian g;
    g.mean = Vec3(v[0], v[1], v[2]);
    g.scales = Vec3(v[3], v[4], v[5]);
    Quat q(v[6], v[7], v[8], v[9]);
    const double qn = q.norm();
    if (!(qn > 1e-12) || !std::isfinite(qn))
      parse_error(path, lineno, "gaussian record " + std::to_string(i) +
                                    ": rotation quaternion has zero norm");
    if (std::abs(qn - 1.0) > 1e-12) q.coeffs() /= qn;
    g.rotation = q;
    g.opacity = v[10];
    g.normal_sign = v[11];
    g.normal_dir = Vec3(v[12], v[13], v[14]);
    g.color = Vec3(v[15], v[16], v[17]);
    std::string extra;
    if (ss >> extra)
      parse_error(path, lineno, "gaussian record " + std::to_string(i) + " has extra fields");
    data.gaussians.push_back(g);
  }

  if (!next()) {
    std::cerr << "warning: " << path << " has no camera block; vacancy queries will fail\n";
    return data;
  }
  const long long n_c = read_count("cameras");
  data.has_camera_block = true;
  for (long long i = 0; i < n_c; ++i) {
    if (!next()) parse_error(path, lineno, "truncated camera block");
    std::istringstream ss(line);
    std::string tag;
    PinholeCamera c;
    double m[12];
    ss >> tag >> c.fx >> c.fy >> c.cx >> c.cy >> c.width >> c.height;
    for (double& x : m) ss >> x;
    if (tag != "c" || ss.fail())
      parse_error(path, lineno, "camera record " + std::to_string(i) + " is malformed");
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) c.rotation(r, k) = m[4 * r + k];
      c.center[r] = m[4 * r + 3];
    }
    data.cameras.push_back(c);
  }
  if (next()) parse_error(path, lineno, "unexpected content after camera block");
  return data;
}

void write_scene_data(const SceneData& data, const std::string& path) {
  std::ofstream out = open_out(path);
  out.precision(17);
  out << "gwrap_scene " << kSceneFormatVersion << '\n';
  out << "gaussians " << data.gaussians.size() << '\n';
  for (const OrientedGaussian& g : data.gaussians) {
    out << "g " << g.mean.x() << ' ' << g.mean.y() << ' ' << g.mean.z() << ' ' << g.scales.x()
        << ' ' << g.scales.y() << ' ' << g.scales.z() << ' ' << g.rotation.w() << ' '
        << g.rotation.x() << ' ' << g.rotation.y() << ' ' << g.rotation.z() << ' '
        << g.opacity << ' ' << g.normal_sign << ' ' << g.normal_dir.x() << ' '
        << g.normal_dir.y() << ' ' << g.normal_dir.z() << ' ' << g.color.x() << ' '
        << g.color.y() << ' ' << g.color.z() << '\n';
  }
  out << "cameras " << data.cameras.size() << '\n';
  for (const PinholeCamera& c : data.cameras) {
    out << "c " << c.fx << ' ' << c.fy << ' ' << c.cx << ' ' << c.cy << ' ' << c.width << ' '
        << c.height;
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) out << ' ' << c.rotation(r, k);
      out << ' ' << c.center[r];
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path);
}

GaussianScene load_scene(const std::string& path, const SceneOptions& options) {
  SceneData data = read_scene_data(path);
  return GaussianScene(std::move(data.gaussians), std::move(data.cameras), options);
}

void save_scene(const GaussianScene& scene, const std::string& path) {
  write_scene_data({scene.gaussians(), scene.cameras(), true}, path);
}

void save_mesh(const TriangleMesh& mesh, const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".obj") {
    std::ofstream out = open_out(path);
    out.precision(17);
    for (const Vec3& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const Face& f : mesh.faces)
      out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path);
  } else if (ext == ".ply") {
    std::ofstream out = open_out(path, true);
    out << "ply\nformat binary_little_endian 1.0\nelement vertex " << mesh.vertices.size()
        << "\nproperty double x\nproperty double y\nproperty double z\nelement face "
        << mesh.faces.size() << "\nproperty list uchar int vertex_indices\nend_header\n";
    for (const Vec3& v : mesh.vertices)
      for (int k = 0; k < 3; ++k) put<double>(out, v[k]);
    for (const Face& f : mesh.faces) {
      put<std::uint8_t>(out, 3);
      for (int k = 0; k < 3; ++k) put<std::int32_t>(out, f[k]);
    }
    if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "mesh path must end in .obj or .ply: " + path);
  }
}

namespace {

struct PlyProperty {
  std::string name, type, list_count_type;
  bool is_list = false;
};
struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

std::size_t ply_type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" ||
      t == "float32")
    return 4;
  if (t == "double" || t == "float64") return 8;
  throw Error(ErrorCode::kParseError, "unknown PLY type " + t);
}

double ply_read_binary(std::istream& in, const std::string& t) {
  unsigned char buf[8];
  const std::size_t n = ply_type_size(t);
  in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n));
  if (!in) throw Error(ErrorCode::kParseError, "truncated PLY body");
  auto as = [&](auto v) {
    std::memcpy(&v, buf, sizeof(v));
    return static_cast<double>(v);
  };
  if (t == "char" || t == "int8") return as(std::int8_t{});
  if (t == "uchar" || t == "uint8") return as(std::uint8_t{});
  if (t == "short" || t == "int16") return as(std::int16_t{});
  if (t == "ushort" || t == "uint16") return as(std::uint16_t{});
  if (t == "int" || t == "int32") return as(std::int32_t{});
  if (t == "uint" || t == "uint32") return as(std::uint32_t{});
  if (t == "float" || t == "float32") return as(float{});
  return as(double{});
}

TriangleMesh read_ply(const std::string& path) {
  std::ifstream in = open_in(path, true);
  std::string line;
  std::getline(in, line);
  if (line.rfind("ply", 0) != 0) throw Error(ErrorCode::kParseError, path + ": not a PLY file");
  bool binary = false;
  std::vector<PlyElement> elements;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string kw;
    ss >> kw;
    if (kw == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt == "binary_little_endian") {
        binary = true;
      } else if (fmt != "ascii") {
        throw Error(ErrorCode::kParseError, path + ": unsupported PLY format " + fmt);
      }
    } else if (kw == "element") {
      PlyElement e;
      ss >> e.name >> e.count;
      elements.push_back(e);
    } else if (kw == "property") {
      if (elements.empty()) throw Error(ErrorCode::kParseError, path + ": property before element");
      PlyProperty p;
      std::string t;
      ss >> t;
      if (t == "list") {
        p.is_list = true;
        ss >> p.list_count_type >> p.type >> p.name;
      } else {
        p.type = t;
        ss >> p.name;
      }
      elements.back().props.push_back(p);
    } else if (kw == "end_header") {
      break;
    }
  }

  TriangleMesh mesh;
  for (const PlyElement& e : elements) {
    for (std::size_t r = 0; r < e.count; ++r) {
      std::vector<double> scalars;
      std::vector<int> list;
      std::istringstream row;
      if (!binary) {
        if (!std::getline(in, line)) throw Error(ErrorCode::kParseError, path + ": truncated");
        row = std::istringstream(line);
      }
      Vec3 pos = Vec3::Zero();
      for (const PlyProperty& p : e.props) {
        auto value = [&](const std::string& t) {
          if (binary) return ply_read_binary(in, t);
          double v;
          if (!(row >> v)) throw Error(ErrorCode::kParseError, path + ": bad PLY row");
          return v;
        };
        if (p.is_list) {
          const int n = static_cast<int>(value(p.list_count_type));
          list.clear();
          for (int k = 0; k < n; ++k) list.push_back(static_cast<int>(value(p.type)));
        } else {
          const double v = value(p.type);
          if (p.name == "x") pos.x() = v;
          if (p.name == "y") pos.y() = v;
          if (p.name == "z") pos.z() = v;
        }
      }
      if (e.name == "vertex") mesh.vertices.push_back(pos);
      if (e.name == "face") {
        for (std::size_t k = 2; k < list.size(); ++k) mesh.faces.push_back({list[0], list[k - 1], list[k]});
      }
    }
  }
  for (const Face& f : mesh.faces)
    for (int v : f)
      if (v < 0 || static_cast<std::size_t>(v) >= mesh.vertices.size())
        throw Error(ErrorCode::kParseError, path + ": face index out of range");
  return mesh;
}

TriangleMesh read_obj(const std::string& path) {
  std::ifstream in = open_in(path);
  TriangleMesh mesh;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string kw;
    ss >> kw;
    if (kw == "v") {
      Vec3 v;
      if (!(ss >> v.x() >> v.y() >> v.z())) parse_error(path, lineno, "bad vertex");
      mesh.vertices.push_back(v);
    } else if (kw == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ss >> tok) {
        int i = std::stoi(tok.substr(0, tok.find('/')));
        idx.push_back(i > 0 ? i - 1 : static_cast<int>(mesh.vertices.size()) + i);
      }
      if (idx.size() < 3) parse_error(path, lineno, "face with fewer than 3 vertices");
      for (std::size_t k = 2; k < idx.size(); ++k) mesh.faces.push_back({idx[0], idx[k - 1], idx[k]});
    }
  }
  for (const Face& f : mesh.faces)
    for (int v : f)
      if (v < 0 || static_cast<std::size_t>(v) >= mesh.vertices.size())
        throw Error(ErrorCode::kParseError, path + ": face index out of range");
  return mesh;
}

}  // namespace

TriangleMesh load_mesh(const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".obj") return read_obj(path);
  if (ext == ".ply") return read_ply(path);
  throw Error(ErrorCode::kInvalidArgument, "mesh path must end in .obj or .ply: " + path);
}

void save_point_cloud(const PointCloud& cloud, const std::string& path) {
  save_mesh(TriangleMesh{cloud.points, {}}, path);
}

PointCloud load_point_cloud(const std::string& path) {
  PointCloud c;
  c.points = read_ply(path).vertices;
  return c;
}

void write_png(const std::string& path, int width, int height, int channels,
               const std::vector<float>& data) {
  if (channels != 1 && channels != 3)
    throw Error(ErrorCode::kInvalidArgument, "PNG output supports 1 or 3 channels");
  std::vector<png_byte> bytes(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const float v = std::isfinite(data[i]) ? std::clamp(data[i], 0.0f, 1.0f) : 0.0f;
    bytes[i] = static_cast<png_byte>(std::lround(v * 255.0f));
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr))
    throw Error(ErrorCode::kIoError, "cannot write PNG " + path + ": " + image.message);
}

void write_raw_map(const std::string& path, int width, int height, int channels,
                   const std::vector<float>& data) {
  std::ofstream out = open_out(path, true);
  out.write("GWMP", 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(width));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(height));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(channels));
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path);
}

RawMap read_raw_map(const std::string& path) {
  std::ifstream in = open_in(path, true);
  char magic[4];
  std::uint32_t dims[3];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in || std::memcmp(magic, "GWMP", 4) != 0)
    throw Error(ErrorCode::kParseError, path + ": not a raw map");
  RawMap m{static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2]), {}};
  m.data.resize(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]);
  in.read(reinterpret_cast<char*>(m.data.data()),
          static_cast<std::streamsize>(m.data.size() * sizeof(float)));
  if (!in) throw Error(ErrorCode::kParseError, path + ": truncated raw map");
  return m;
}

void write_render_outputs(const RenderedMaps& maps, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::size_t n = maps.alpha.size();
  auto srgb = [](double c) {
    c = std::clamp(c, 0.0, 1.0);
    return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
  };
  std::vector<float> color(3 * n), alpha(n), depth(n), normal(3 * n), normal_vis(3 * n);
  for (std::size_t p = 0; p < n; ++p) {
    for (int k = 0; k < 3; ++k) {
      color[3 * p + k] = static_cast<float>(srgb(maps.color[p][k]));
      normal[3 * p + k] = static_cast<float>(maps.normal[p][k]);
      normal_vis[3 * p + k] = static_cast<float>(0.5 * (maps.normal[p][k] + 1.0));
    }
    alpha[p] = static_cast<float>(maps.alpha[p]);
    depth[p] = static_cast<float>(maps.depth[p]);
  }
  const std::filesystem::path d(dir);
  write_png((d / "color.png").string(), maps.width, maps.height, 3, color);
  write_png((d / "alpha.png").string(), maps.width, maps.height, 1, alpha);
  write_png((d / "normal.png").string(), maps.width, maps.height, 3, normal_vis);
  write_raw_map((d / "alpha.gwmp").string(), maps.width, maps.height, 1, alpha);
  write_raw_map((d / "depth.gwmp").string(), maps.width, maps.height, 1, depth);
  write_raw_map((d / "normal.gwmp").string(), maps.width, maps.height, 3, normal);
}

std::string to_json(const EvalResult& r) {
  nlohmann::json j;
  j["protocol"] = std::string(to_string(r.protocol));
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["chamfer"] = r.chamfer;
  j["tau"] = r.tau;
  j["pred_points"] = r.pred_points;
  j["gt_points"] = r.gt_points;
  return j.dump(2);
}

}  // namespace gwrap
