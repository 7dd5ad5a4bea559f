#include "gwrap/meshing.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <map>
#include <unordered_map>

#include "gwrap/error.hpp"
#include "gwrap/rng.hpp"

namespace gwrap {

PivotSet generate_pivots(const GaussianScene& scene, bool multi) {
  PivotSet out;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const Vec3& n = scene.normal(i);
    const double len = n.norm();
    if (len < 1e-6) {
      ++out.skipped;
      continue;
    }
    const OrientedGaussian& g = scene.gaussian(i);
    const double s = normal_scale_along(g);
    const Vec3 step = s * n / len;
    auto emit = [&](const Vec3& p, PivotSet::Kind k) {
      out.points.push_back(p);
      out.kind.push_back(k);
      out.gaussian.push_back(i);
    };
    emit(g.mean, PivotSet::Kind::kCenter);
    if (multi) {
      for (int m = 1; m <= 3; ++m) {
        emit(g.mean + m * step, PivotSet::Kind::kOffset);
        emit(g.mean - m * step, PivotSet::Kind::kOffset);
      }
    } else {
      emit(g.mean + 3.0 * step, PivotSet::Kind::kOffset);
    }
  }
  return out;
}

namespace {

// Triangles of each inside/outside pattern, as pairs of local tet vertices
// (one pair per triangle corner). Bit k of the case index marks vertex k inside.
struct CaseTable {
  struct Tri {
    std::array<std::array<int, 2>, 3> edges;
  };
  std::array<std::vector<Tri>, 16> cases;

  CaseTable() {
    // Orientation is combinatorial for positively oriented tets, so it can be
    // fixed once on a reference tet.
    const Vec3 ref[4] = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
    for (int c = 1; c < 15; ++c) {
      std::vector<int> in, out;
      for (int k = 0; k < 4; ++k) ((c >> k) & 1 ? in : out).push_back(k);
      Vec3 cin = Vec3::Zero(), cout = Vec3::Zero();
      for (int k : in) cin += ref[k] / static_cast<double>(in.size());
      for (int k : out) cout += ref[k] / static_cast<double>(out.size());
      std::vector<std::array<int, 2>> poly;
      if (in.size() == 1 || out.size() == 1) {
        const bool single_in = in.size() == 1;
        const int apex = single_in ? in[0] : out[0];
        const std::vector<int>& rest = single_in ? out : in;
        for (int k : rest) poly.push_back(single_in ? std::array{apex, k} : std::array{k, apex});
      } else {
        poly = {{in[0], out[0]}, {in[0], out[1]}, {in[1], out[1]}, {in[1], out[0]}};
      }
      auto mid = [&](const std::array<int, 2>& e) { return 0.5 * (ref[e[0]] + ref[e[1]]); };
      const Vec3 n = (mid(poly[1]) - mid(poly[0])).cross(mid(poly[2]) - mid(poly[0]));
      if (n.dot(cout - cin) < 0.0) std::reverse(poly.begin() + 1, poly.end());
      cases[c].push_back({{poly[0], poly[1], poly[2]}});
      if (poly.size() == 4) cases[c].push_back({{poly[0], poly[2], poly[3]}});
    }
  }
};

const CaseTable& case_table() {
  static const CaseTable table;
  return table;
}

double occupancy(const GaussianScene& scene, const Vec3& x) {
  return 1.0 - vacancy_lower_bound(scene, x);
}

}  // namespace

IsoMesh marching_tetrahedra(const TetMesh& tets, const std::vector<double>& values, double iso) {
  if (values.size() != tets.vertices.size())
    throw Error(ErrorCode::kInvalidArgument, "one value per tet vertex required");
  for (double v : values)
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "non-finite field value");
  IsoMesh out;
  std::unordered_map<std::uint64_t, int> edge_vertex;
  const CaseTable& table = case_table();
  for (const Tet& t : tets.tets) {
    int c = 0;
    for (int k = 0; k < 4; ++k)
      if (values[t[k]] > iso) c |= 1 << k;
    for (const CaseTable::Tri& tri : table.cases[c]) {
      Face f;
      for (int j = 0; j < 3; ++j) {
        const int a = t[tri.edges[j][0]];  // inside end
        const int b = t[tri.edges[j][1]];  // outside end
        const std::uint64_t key = (static_cast<std::uint64_t>(std::min(a, b)) << 32) |
                                  static_cast<std::uint32_t>(std::max(a, b));
        auto [it, inserted] = edge_vertex.emplace(key, static_cast<int>(out.mesh.vertices.size()));
        if (inserted) {
          const double s = (values[a] - iso) / (values[a] - values[b]);
          const Vec3& pa = tets.vertices[a];
          const Vec3& pb = tets.vertices[b];
          out.mesh.vertices.push_back(pa + s * (pb - pa));
          out.edge_inside.push_back(pa);
          out.edge_outside.push_back(pb);
        }
        f[j] = it->second;
      }
      out.mesh.faces.push_back(f);
    }
  }
  return out;
}

void refine_to_isosurface(IsoMesh& iso, const GaussianScene& scene, double tol,
                          int max_iterations) {
  auto& verts = iso.mesh.vertices;
#pragma omp parallel for schedule(dynamic, 8)
  for (long long i = 0; i < static_cast<long long>(verts.size()); ++i) {
    const Vec3 a = iso.edge_inside[i];
    const Vec3 b = iso.edge_outside[i];
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    Vec3 best = verts[i];
    double occ = occupancy(scene, best);
    double best_err = std::abs(occ - 0.5);
    if (best_err < tol || len2 <= 0.0) continue;
    double lo = 0.0, hi = 1.0;
    const double s0 = std::clamp((best - a).dot(ab) / len2, 0.0, 1.0);
    (occ > 0.5 ? lo : hi) = s0;
    for (int it = 0; it < max_iterations && best_err >= tol; ++it) {
      const double mid = 0.5 * (lo + hi);
      const Vec3 x = a + mid * ab;
      occ = occupancy(scene, x);
      const double err = std::abs(occ - 0.5);
      if (err < best_err) {
        best_err = err;
        best = x;
      }
      (occ > 0.5 ? lo : hi) = mid;
    }
    verts[i] = best;
  }
}

IsoMesh mesh_mtet_iso(const GaussianScene& scene, bool multi_pivot) {
  if (scene.cameras().empty()) throw Error(ErrorCode::kNoCameras, "meshing needs cameras");
  const PivotSet pivots = generate_pivots(scene, multi_pivot);
  const TetMesh tets = delaunay_tetrahedralize(pivots.points);
  std::vector<double> occ(pivots.points.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (long long i = 0; i < static_cast<long long>(occ.size()); ++i)
    occ[i] = occupancy(scene, pivots.points[i]);
  IsoMesh iso = marching_tetrahedra(tets, occ, 0.5);
  refine_to_isosurface(iso, scene);
  return iso;
}

TriangleMesh mesh_mtet(const GaussianScene& scene, bool multi_pivot) {
  return mesh_mtet_iso(scene, multi_pivot).mesh;
}

void validate(const PamConfig& c) {
  auto fail = [](const char* what) { throw Error(ErrorCode::kBadParams, what); };
  if (c.samples < 1) fail("pam samples must be at least 1");
  if (c.newton_steps < 1) fail("pam newton_steps must be at least 1");
  if (!(c.eps > 0.0)) fail("pam eps must be positive");
  if (c.samples_per_tet < 1) fail("pam samples_per_tet must be at least 1");
  if (c.max_rounds < 1) fail("pam max_rounds must be at least 1");
  if (c.neighbors < 1) fail("pam neighbors must be at least 1");
  if (c.roi && c.roi->empty()) fail("pam roi box is empty");
}

std::vector<Vec3> pam_sample_faces(const TriangleMesh& mesh,
                                   const std::vector<PinholeCamera>& cameras,
                                   std::size_t count, std::uint64_t seed,
                                   const std::optional<Aabb>& roi) {
  if (mesh.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot sample an empty mesh");
  if (cameras.empty()) throw Error(ErrorCode::kNoCameras, "face weighting needs cameras");
  std::vector<double> cdf(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Vec3 c = mesh.face_centroid(f);
    double dist = std::numeric_limits<double>::infinity();
    for (const PinholeCamera& cam : cameras) dist = std::min(dist, (cam.center - c).norm());
    total += mesh.face_area(f) / std::max(dist, 1e-12);
    cdf[f] = total;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::kInvalidArgument, "mesh has zero area");

  std::vector<Vec3> out;
  out.reserve(count);
  const std::size_t budget = roi ? 100 * count : count;
  for (std::size_t draw = 0; draw < budget && out.size() < count; ++draw) {
    Engine rng = make_engine(seed, streams::kPamSample, draw);
    const double pick = uniform01(rng) * total;
    const std::size_t f = std::min<std::size_t>(
        std::upper_bound(cdf.begin(), cdf.end(), pick) - cdf.begin(), cdf.size() - 1);
    const double r1 = std::sqrt(uniform01(rng));
    const double r2 = uniform01(rng);
    const Face& t = mesh.faces[f];
    const Vec3 p = (1.0 - r1) * mesh.vertices[t[0]] + r1 * (1.0 - r2) * mesh.vertices[t[1]] +
                   r1 * r2 * mesh.vertices[t[2]];
    if (roi && !roi->contains(p)) continue;
    out.push_back(p);
  }
  return out;
}

Vec3 pam_newton_step(const GaussianScene& scene, const Vec3& x, int k) {
  const Vec3 field = vector_field(scene, x, k);
  const double f2 = field.squaredNorm();
  if (std::sqrt(f2) < kDefaultVectorZeroEps) return x;
  const double v = vacancy_lower_bound(scene, x);
  if (!(v > 0.0)) return x;
  // grad v = v V, so grad v / |grad v|^2 = V / (v |V|^2).
  Vec3 step = (0.5 - v) / (2.0 * v * f2) * field;
  // Trust region: far from the surface the linearization is meaningless.
  const double cap = scene.max_scale();
  const double len = step.norm();
  if (len > cap) step *= cap / len;
  return x + step;
}

std::vector<Vec3> pam_newton_project(const std::vector<Vec3>& points,
                                     const GaussianScene& scene, int steps, int k) {
  if (steps < 1) throw Error(ErrorCode::kBadParams, "newton steps must be at least 1");
  std::vector<Vec3> out = points;
#pragma omp parallel for schedule(dynamic, 16)
  for (long long i = 0; i < static_cast<long long>(out.size()); ++i)
    for (int s = 0; s < steps; ++s) out[i] = pam_newton_step(scene, out[i], k);
  return out;
}

FilterResult pam_filter(const std::vector<Vec3>& points, const GaussianScene& scene,
                        double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::kBadParams, "filter eps must be positive");
  std::vector<std::uint8_t> keep(points.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (long long i = 0; i < static_cast<long long>(points.size()); ++i)
    keep[i] = std::abs(0.5 - vacancy_lower_bound(scene, points[i])) <= eps;
  FilterResult out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (keep[i]) {
      out.kept.push_back(points[i]);
    } else {
      ++out.removed;
    }
  }
  return out;
}

std::vector<std::uint8_t> pam_classify_tets(const TetMesh& tets, const GaussianScene& scene,
                                            int samples_per_tet, std::uint64_t seed) {
  if (samples_per_tet < 1) throw Error(ErrorCode::kBadParams, "samples_per_tet must be >= 1");
  std::vector<std::uint8_t> inside(tets.tets.size(), 0);
#pragma omp parallel for schedule(dynamic, 16)
  for (long long t = 0; t < static_cast<long long>(tets.tets.size()); ++t) {
    Engine rng = make_engine(seed, streams::kPamClassify, static_cast<std::uint64_t>(t));
    std::vector<double> vac(samples_per_tet);
    for (int s = 0; s < samples_per_tet; ++s) {
      // Uniform barycentric weights from normalized exponential spacings.
      double w[4], sum = 0.0;
      for (double& e : w) sum += (e = -std::log(1.0 - uniform01(rng)));
      Vec3 x = Vec3::Zero();
      for (int k = 0; k < 4; ++k) x += (w[k] / sum) * tets.vertices[tets.tets[t][k]];
      vac[s] = vacancy_lower_bound(scene, x);
    }
    std::sort(vac.begin(), vac.end());
    const std::size_t n = vac.size();
    const double median = n % 2 ? vac[n / 2] : 0.5 * (vac[n / 2 - 1] + vac[n / 2]);
    inside[t] = median < 0.5;
  }
  return inside;
}

std::size_t pam_repair_labels(const TetMesh& tets, std::vector<std::uint8_t>& inside) {
  if (inside.size() != tets.tets.size())
    throw Error(ErrorCode::kInvalidArgument, "one label per tet required");
  auto key = [](int a, int b) {
    return (static_cast<std::uint64_t>(std::min(a, b)) << 32) | static_cast<std::uint32_t>(std::max(a, b));
  };
  std::unordered_map<std::uint64_t, std::vector<int>> ring;
  for (std::size_t t = 0; t < tets.tets.size(); ++t)
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b)
        ring[key(tets.tets[t][a], tets.tets[t][b])].push_back(static_cast<int>(t));

  std::size_t flipped = 0;
  for (;;) {
    std::unordered_map<std::uint64_t, int> uses;
    for (std::size_t t = 0; t < tets.tets.size(); ++t) {
      if (!inside[t]) continue;
      for (int k = 0; k < 4; ++k) {
        const int n = tets.neighbors[t][k];
        if (n >= 0 && inside[n]) continue;
        const Tet& q = tets.tets[t];
        for (int j = 0; j < 3; ++j)
          ++uses[key(q[kTetFace[k][j]], q[kTetFace[k][(j + 1) % 3]])];
      }
    }
    std::size_t pass = 0;
    for (const auto& [edge, count] : uses) {
      if (count <= 2) continue;
      for (int t : ring[edge])
        if (!inside[t]) {
          inside[t] = 1;
          ++pass;
        }
    }
    if (pass == 0) break;
    flipped += pass;
  }
  return flipped;
}

TriangleMesh pam_extract(const TetMesh& tets, const std::vector<std::uint8_t>& inside) {
  if (inside.size() != tets.tets.size())
    throw Error(ErrorCode::kInvalidArgument, "one label per tet required");
  TriangleMesh out;
  std::vector<int> remap(tets.vertices.size(), -1);
  auto vertex = [&](int v) {
    if (remap[v] < 0) {
      remap[v] = static_cast<int>(out.vertices.size());
      out.vertices.push_back(tets.vertices[v]);
    }
    return remap[v];
  };
  for (std::size_t t = 0; t < tets.tets.size(); ++t) {
    if (!inside[t]) continue;
    for (int k = 0; k < 4; ++k) {
      const int n = tets.neighbors[t][k];
      if (n >= 0 && inside[n]) continue;
      const Tet& q = tets.tets[t];
      out.faces.push_back(
          {vertex(q[kTetFace[k][0]]), vertex(q[kTetFace[k][1]]), vertex(q[kTetFace[k][2]])});
    }
  }
  return out;
}

TriangleMesh mesh_pam(const GaussianScene& scene, const PamConfig& config, PamReport* report) {
  validate(config);
  const TriangleMesh substrate = mesh_mtet(scene);
  if (substrate.empty())
    throw Error(ErrorCode::kInsufficientPoints, "marching tetrahedra produced no surface");

  PamReport rep;
  std::vector<Vec3> kept;
  std::vector<Vec3> batch = pam_sample_faces(substrate, scene.cameras(),
                                             static_cast<std::size_t>(config.samples),
                                             split_seed(config.seed, 0), config.roi);
  for (int round = 0; round < config.max_rounds; ++round) {
    rep.rounds = round + 1;
    std::vector<Vec3> projected =
        pam_newton_project(batch, scene, config.newton_steps, config.neighbors);
    std::size_t removed = 0;
    if (config.roi) {
      std::vector<Vec3> in_box;
      for (const Vec3& p : projected) {
        if (config.roi->contains(p)) {
          in_box.push_back(p);
        } else {
          ++removed;
        }
      }
      projected.swap(in_box);
    }
    FilterResult filtered = pam_filter(projected, scene, config.eps);
    removed += filtered.removed;
    kept.insert(kept.end(), filtered.kept.begin(), filtered.kept.end());
    rep.removed_total += removed;
    if (removed == 0 || round + 1 == config.max_rounds) break;
    batch = pam_sample_faces(substrate, scene.cameras(), removed,
                             split_seed(config.seed, static_cast<std::uint64_t>(round) + 1),
                             config.roi);
  }
  rep.kept = kept.size();
  if (report) *report = rep;
  if (kept.size() < 4)
    throw Error(ErrorCode::kInsufficientPoints, "fewer than 4 points survived filtering");

  const TetMesh tets = delaunay_tetrahedralize(kept);
  std::vector<std::uint8_t> inside =
      pam_classify_tets(tets, scene, config.samples_per_tet, config.seed);
  rep.relabelled = pam_repair_labels(tets, inside);
  if (report) *report = rep;
  return pam_extract(tets, inside);
}

WatertightReport watertight_check(const TriangleMesh& mesh) {
  struct EdgeUse {
    int count = 0;
    int forward = 0;  // uses as (min -> max)
  };
  std::map<std::pair<int, int>, EdgeUse> edges;
  for (const Face& f : mesh.faces) {
    for (int j = 0; j < 3; ++j) {
      const int a = f[j], b = f[(j + 1) % 3];
      EdgeUse& e = edges[{std::min(a, b), std::max(a, b)}];
      ++e.count;
      if (a < b) ++e.forward;
    }
  }
  WatertightReport r;
  for (const auto& [key, e] : edges) {
    if (e.count == 1) {
      ++r.boundary_edges;
    } else if (e.count > 2) {
      ++r.non_manifold_edges;
    } else if (e.forward != 1) {
      ++r.inconsistent_edges;
    }
  }
  r.closed = !mesh.faces.empty() && r.boundary_edges == 0 && r.non_manifold_edges == 0 &&
             r.inconsistent_edges == 0;
  return r;
}

}  // namespace gwrap
