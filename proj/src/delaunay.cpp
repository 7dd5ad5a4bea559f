#include "gwrap/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>

#include "gwrap/error.hpp"
#include "gwrap/rng.hpp"
#include "predicates.hpp"

namespace gwrap {

double tet_orientation(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).cross(c - a).dot(d - a);
}

namespace {

constexpr int kGhost = -1;

// Triangulation of the perturbed points closed off by "ghost" tets: every hull
// face carries one tet whose fourth vertex is the point at infinity.
class Builder {
 public:
  explicit Builder(std::vector<Vec3> pts) : p_(std::move(pts)) {}

  void init(int a, int b, int c, int d) {
    if (detail::orient3d(p_[a], p_[b], p_[c], p_[d]) < 0) std::swap(c, d);
    const int t0 = add({a, b, c, d});
    for (int k = 0; k < 4; ++k) {
      const Tet& t = tets_[t0];
      const int g = add({t[kTetFace[k][0]], t[kTetFace[k][1]], t[kTetFace[k][2]], kGhost});
      nbr_[t0][k] = g;
      nbr_[g][3] = t0;
    }
    // Ghost-ghost adjacency: faces sharing a hull edge.
    link_by_edges({1, 2, 3, 4}, kGhost);
    last_ = t0;
  }

  void insert(int v) {
    const int start = locate(v);
    std::vector<int> cavity = grow_cavity(start, v);
    retriangulate(cavity, v);
  }

  TetMesh extract(const std::vector<Vec3>& originals) const {
    TetMesh mesh;
    mesh.vertices = originals;
    std::vector<int> remap(tets_.size(), -1);
    for (std::size_t t = 0; t < tets_.size(); ++t) {
      if (!alive_[t] || is_ghost(static_cast<int>(t))) continue;
      remap[t] = static_cast<int>(mesh.tets.size());
      mesh.tets.push_back(tets_[t]);
    }
    mesh.neighbors.resize(mesh.tets.size());
    for (std::size_t t = 0; t < tets_.size(); ++t) {
      if (remap[t] < 0) continue;
      for (int k = 0; k < 4; ++k) mesh.neighbors[remap[t]][k] = remap[nbr_[t][k]];
    }
    return mesh;
  }

 private:
  int add(const Tet& t) {
    int id;
    if (!free_.empty()) {
      id = free_.back();
      free_.pop_back();
      tets_[id] = t;
      nbr_[id] = {-1, -1, -1, -1};
      alive_[id] = 1;
    } else {
      id = static_cast<int>(tets_.size());
      tets_.push_back(t);
      nbr_.push_back({-1, -1, -1, -1});
      alive_.push_back(1);
      mark_.push_back(0);
    }
    return id;
  }

  bool is_ghost(int t) const {
    const Tet& v = tets_[t];
    return v[0] == kGhost || v[1] == kGhost || v[2] == kGhost || v[3] == kGhost;
  }

  static int ghost_slot(const Tet& v) {
    for (int k = 0; k < 4; ++k)
      if (v[k] == kGhost) return k;
    return -1;
  }

  // Strict conflict of point v with tet t (v inside the open circumball; for
  // ghost tets, strictly beyond the hull face or on its plane and in conflict
  // with the finite tet behind it).
  bool conflict(int t, int v) const {
    const Tet& q = tets_[t];
    const int g = ghost_slot(q);
    if (g < 0) return detail::insphere(p_[q[0]], p_[q[1]], p_[q[2]], p_[q[3]], p_[v]) > 0;
    const int* f = kTetFace[g];
    // The ghost tet's outward face points into the hull.
    const int o = detail::orient3d(p_[q[f[0]]], p_[q[f[1]]], p_[q[f[2]]], p_[v]);
    if (o < 0) return true;
    if (o > 0) return false;
    return conflict(nbr_[t][g], v);
  }

  int locate(int v) {
    int t = last_;
    if (!alive_[t]) t = first_alive();
    std::uint64_t salt = static_cast<std::uint64_t>(v);
    for (std::size_t steps = 0; steps < 4 * tets_.size() + 16; ++steps) {
      if (is_ghost(t)) return t;
      const Tet& q = tets_[t];
      const int offset = static_cast<int>(mix64(salt++) & 3u);
      int next = -1;
      for (int j = 0; j < 4; ++j) {
        const int k = (j + offset) & 3;
        const int* f = kTetFace[k];
        if (detail::orient3d(p_[q[f[0]]], p_[q[f[1]]], p_[q[f[2]]], p_[v]) > 0) {
          next = nbr_[t][k];
          break;
        }
      }
      if (next < 0) return t;
      t = next;
    }
    return t;  // walk did not settle; grow_cavity falls back to a scan
  }

  int first_alive() const {
    for (std::size_t t = 0; t < alive_.size(); ++t)
      if (alive_[t]) return static_cast<int>(t);
    return -1;
  }

  std::vector<int> grow_cavity(int start, int v) {
    if (!conflict(start, v)) {
      start = -1;
      for (std::size_t t = 0; t < tets_.size(); ++t) {
        if (alive_[t] && conflict(static_cast<int>(t), v)) {
          start = static_cast<int>(t);
          break;
        }
      }
      if (start < 0) throw Error(ErrorCode::kDegenerateInput, "point location failed");
    }
    std::vector<int> cavity{start};
    mark_[start] = 1;
    for (std::size_t head = 0; head < cavity.size(); ++head) {
      for (int k = 0; k < 4; ++k) {
        const int n = nbr_[cavity[head]][k];
        if (n < 0 || mark_[n]) continue;
        if (conflict(n, v)) {
          mark_[n] = 1;
          cavity.push_back(n);
        }
      }
    }
    // Star-shape repair: every finite boundary face must see v on its inner side.
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t c = 0; c < cavity.size(); ++c) {
        const int t = cavity[c];
        for (int k = 0; k < 4; ++k) {
          const int n = nbr_[t][k];
          if (mark_[n]) continue;
          const Tet& q = tets_[t];
          const int* f = kTetFace[k];
          if (q[f[0]] == kGhost || q[f[1]] == kGhost || q[f[2]] == kGhost) continue;
          if (detail::orient3d(p_[q[f[0]]], p_[q[f[1]]], p_[q[f[2]]], p_[v]) < 0) continue;
          mark_[n] = 1;
          cavity.push_back(n);
          changed = true;
        }
      }
    }
    return cavity;
  }

  void retriangulate(const std::vector<int>& cavity, int v) {
    struct Pending {
      int tet;
      int outer;
    };
    std::vector<Pending> created;
    for (int t : cavity) {
      for (int k = 0; k < 4; ++k) {
        const int n = nbr_[t][k];
        if (mark_[n]) continue;
        const Tet& q = tets_[t];
        const int* f = kTetFace[k];
        // Face opposite v in the new tet must keep the cavity's outward orientation.
        const int id = add({q[f[0]], q[f[2]], q[f[1]], v});
        nbr_[id][3] = n;
        for (int j = 0; j < 4; ++j)
          if (nbr_[n][j] == t) nbr_[n][j] = id;
        created.push_back({id, n});
      }
    }
    for (int t : cavity) {
      alive_[t] = 0;
      mark_[t] = 0;
      free_.push_back(t);
    }
    std::vector<int> ids;
    ids.reserve(created.size());
    for (const Pending& c : created) ids.push_back(c.tet);
    link_by_edges(ids, v);
    last_ = ids.front();
    for (int id : ids)
      if (!is_ghost(id)) last_ = id;
  }

  // Connects the faces that contain `apex` among the given tets; such faces are
  // identified by their other two vertices.
  void link_by_edges(const std::vector<int>& ids, int apex) {
    std::unordered_map<std::uint64_t, std::pair<int, int>> open;
    open.reserve(ids.size() * 3);
    for (int id : ids) {
      const Tet& q = tets_[id];
      for (int k = 0; k < 4; ++k) {
        if (q[k] == apex) continue;
        int e[2], m = 0;
        for (int j = 0; j < 4; ++j)
          if (j != k && q[j] != apex) e[m++] = q[j];
        const auto lo = static_cast<std::uint32_t>(std::min(e[0], e[1]) + 1);
        const auto hi = static_cast<std::uint32_t>(std::max(e[0], e[1]) + 1);
        const std::uint64_t key = (static_cast<std::uint64_t>(lo) << 32) | hi;
        auto it = open.find(key);
        if (it == open.end()) {
          open.emplace(key, std::make_pair(id, k));
        } else {
          nbr_[id][k] = it->second.first;
          nbr_[it->second.first][it->second.second] = id;
          open.erase(it);
        }
      }
    }
  }

  std::vector<Vec3> p_;
  std::vector<Tet> tets_;
  std::vector<std::array<int, 4>> nbr_;
  std::vector<std::uint8_t> alive_, mark_;
  std::vector<int> free_;
  int last_ = 0;
};

std::uint64_t morton_key(const Vec3& p, const Aabb& box) {
  std::uint64_t key = 0;
  const Vec3 ext = box.extent().cwiseMax(Vec3::Constant(1e-300));
  std::uint32_t c[3];
  for (int a = 0; a < 3; ++a) {
    const double u = std::clamp((p[a] - box.lo[a]) / ext[a], 0.0, 1.0);
    c[a] = static_cast<std::uint32_t>(u * 2097151.0);
  }
  for (int bit = 20; bit >= 0; --bit)
    for (int a = 0; a < 3; ++a) key = (key << 1) | ((c[a] >> bit) & 1u);
  return key;
}

}  // namespace

TetMesh delaunay_tetrahedralize(const std::vector<Vec3>& points) {
  Aabb box;
  for (const Vec3& p : points) {
    if (!p.allFinite()) throw Error(ErrorCode::kInvalidArgument, "non-finite input point");
    box.extend(p);
  }
  const double diag = box.diagonal();
  const double tol = 1e-9 * std::max(diag, 1e-300);

  // Deduplicate on a hash grid of cell size tol.
  std::vector<int> unique;
  {
    std::unordered_map<std::uint64_t, std::vector<int>> grid;
    auto cell_key = [&](long long x, long long y, long long z) {
      return mix64(static_cast<std::uint64_t>(x) * 73856093ULL ^
                   static_cast<std::uint64_t>(y) * 19349663ULL ^
                   static_cast<std::uint64_t>(z) * 83492791ULL);
    };
    for (std::size_t i = 0; i < points.size(); ++i) {
      const Vec3 q = (points[i] - box.lo) / tol;
      const long long cx = static_cast<long long>(std::floor(q.x()));
      const long long cy = static_cast<long long>(std::floor(q.y()));
      const long long cz = static_cast<long long>(std::floor(q.z()));
      bool dup = false;
      for (long long dx = -1; dx <= 1 && !dup; ++dx)
        for (long long dy = -1; dy <= 1 && !dup; ++dy)
          for (long long dz = -1; dz <= 1 && !dup; ++dz) {
            auto it = grid.find(cell_key(cx + dx, cy + dy, cz + dz));
            if (it == grid.end()) continue;
            for (int j : it->second)
              if ((points[j] - points[i]).norm() <= tol) dup = true;
          }
      if (dup) continue;
      grid[cell_key(cx, cy, cz)].push_back(static_cast<int>(i));
      unique.push_back(static_cast<int>(i));
    }
  }
  if (unique.size() < 4)
    throw Error(ErrorCode::kDegenerateInput, "fewer than 4 distinct points");

  // Initial simplex from extreme points, on the unperturbed coordinates.
  const int a = unique.front();
  int b = a, c = a, d = a;
  double best = -1.0;
  for (int i : unique)
    if ((points[i] - points[a]).squaredNorm() > best) best = (points[i] - points[a]).squaredNorm(), b = i;
  best = -1.0;
  const Vec3 ab = points[b] - points[a];
  for (int i : unique) {
    const double area = ab.cross(points[i] - points[a]).squaredNorm();
    if (area > best) best = area, c = i;
  }
  best = -1.0;
  for (int i : unique) {
    const double vol = std::abs(tet_orientation(points[a], points[b], points[c], points[i]));
    if (vol > best) best = vol, d = i;
  }
  const double scale = diag * diag * diag;
  if (!(best > 1e-12 * scale))
    throw Error(ErrorCode::kDegenerateInput, "input points are coplanar or collinear");

  std::vector<Vec3> jittered(points.size());
  for (int i : unique) {
    Engine rng = make_engine(0, streams::kDelaunayJitter, static_cast<std::uint64_t>(i));
    Vec3 j;
    for (int k = 0; k < 3; ++k) j[k] = 2.0 * uniform01(rng) - 1.0;
    jittered[i] = points[i] + tol * j;
  }

  Builder builder(std::move(jittered));
  builder.init(a, b, c, d);

  std::vector<std::pair<std::uint64_t, int>> order;
  order.reserve(unique.size());
  for (int i : unique)
    if (i != a && i != b && i != c && i != d) order.emplace_back(morton_key(points[i], box), i);
  std::sort(order.begin(), order.end());
  for (const auto& [key, i] : order) builder.insert(i);
  return builder.extract(points);
}

}  // namespace gwrap
