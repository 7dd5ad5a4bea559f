#include "gwrap/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

namespace gwrap {

KdTree::KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 1);
    build(0, static_cast<std::uint32_t>(points_.size()), 0);
  }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end, int depth) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{});
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= kLeafSize) return id;

  Aabb box;
  for (std::uint32_t i = begin; i < end; ++i) box.extend(points_[order_[i]]);
  int axis = 0;
  box.extent().maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return points_[a][axis] < points_[b][axis];
                   });
  const double split = points_[order_[mid]][axis];
  const std::int32_t left = build(begin, mid, depth + 1);
  const std::int32_t right = build(mid, end, depth + 1);
  nodes_[id].axis = static_cast<std::uint8_t>(axis);
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::pair<std::size_t, double> KdTree::nearest(const Vec3& q) const {
  auto best = knn(q, 1);
  return best.front();
}

std::vector<std::pair<std::size_t, double>> KdTree::knn(const Vec3& q, std::size_t k) const {
  using Entry = std::pair<double, std::uint32_t>;  // (d2, index), max-heap by default
  std::priority_queue<Entry> heap;
  if (nodes_.empty() || k == 0) return {};

  auto worst = [&] {
    return heap.size() < k ? std::numeric_limits<double>::infinity() : heap.top().first;
  };
  // Recursive descent with explicit stack holding the lower bound per subtree.
  struct Item {
    std::int32_t node;
    double bound;
  };
  std::vector<Item> stack;
  stack.push_back({0, 0.0});
  while (!stack.empty()) {
    const Item item = stack.back();
    stack.pop_back();
    if (item.bound > worst()) continue;
    const Node& node = nodes_[item.node];
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::uint32_t idx = order_[i];
        const Entry e{(points_[idx] - q).squaredNorm(), idx};
        if (heap.size() < k) {
          heap.push(e);
        } else if (e < heap.top()) {
          heap.pop();
          heap.push(e);
        }
      }
      continue;
    }
    const double diff = q[node.axis] - node.split;
    const std::int32_t near = diff < 0.0 ? node.left : node.right;
    const std::int32_t far = diff < 0.0 ? node.right : node.left;
    stack.push_back({far, std::max(item.bound, diff * diff)});
    stack.push_back({near, item.bound});
  }

  std::vector<std::pair<std::size_t, double>> out(heap.size());
  for (std::size_t i = heap.size(); i-- > 0;) {
    out[i] = {heap.top().second, heap.top().first};
    heap.pop();
  }
  return out;
}

Bvh::Bvh(std::vector<Aabb> boxes) : boxes_(std::move(boxes)) {
  order_.resize(boxes_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!boxes_.empty()) {
    nodes_.reserve(2 * boxes_.size() / kLeafSize + 1);
    build(0, static_cast<std::uint32_t>(boxes_.size()));
  }
}

std::int32_t Bvh::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{});
  Aabb box, centers;
  for (std::uint32_t i = begin; i < end; ++i) {
    box.extend(boxes_[order_[i]]);
    centers.extend(boxes_[order_[i]].center());
  }
  nodes_[id].box = box;
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= kLeafSize) return id;

  int axis = 0;
  centers.extent().maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return boxes_[a].lo[axis] + boxes_[a].hi[axis] <
                            boxes_[b].lo[axis] + boxes_[b].hi[axis];
                   });
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

bool Bvh::slab(const Aabb& b, const Vec3& origin, const Vec3& inv_dir, double tmin,
               double tmax) {
  for (int a = 0; a < 3; ++a) {
    double t0 = (b.lo[a] - origin[a]) * inv_dir[a];
    double t1 = (b.hi[a] - origin[a]) * inv_dir[a];
    if (std::isnan(t0) || std::isnan(t1)) {
      // Ray parallel to the slab and origin on its boundary plane.
      if (origin[a] < b.lo[a] || origin[a] > b.hi[a]) return false;
      continue;
    }
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return false;
  }
  return true;
}

void Bvh::visit_ray(const Ray& ray, double tmin, double tmax,
                    const std::function<double(std::size_t, double)>& visitor) const {
  if (nodes_.empty()) return;
  const Vec3 inv = ray.direction.cwiseInverse();
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (!slab(node.box, ray.origin, inv, tmin, tmax)) continue;
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        if (slab(boxes_[order_[i]], ray.origin, inv, tmin, tmax))
          tmax = std::min(tmax, visitor(order_[i], tmax));
      }
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
}

namespace {
double box_distance_sq(const Aabb& b, const Vec3& p) {
  const Vec3 d = (b.lo - p).cwiseMax(p - b.hi).cwiseMax(Vec3::Zero());
  return d.squaredNorm();
}
}  // namespace

std::pair<std::size_t, double> Bvh::nearest(
    const Vec3& p, const std::function<double(std::size_t)>& distance) const {
  std::size_t best = boxes_.size();
  double best_d = std::numeric_limits<double>::infinity();
  if (nodes_.empty()) return {best, best_d};
  using Entry = std::pair<double, std::int32_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  queue.push({box_distance_sq(nodes_[0].box, p), 0});
  while (!queue.empty()) {
    const auto [bound, id] = queue.top();
    queue.pop();
    if (bound >= best_d * best_d) break;
    const Node& node = nodes_[id];
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::uint32_t item = order_[i];
        if (box_distance_sq(boxes_[item], p) >= best_d * best_d) continue;
        const double d = distance(item);
        if (d < best_d || (d == best_d && item < best)) {
          best_d = d;
          best = item;
        }
      }
    } else {
      queue.push({box_distance_sq(nodes_[node.left].box, p), node.left});
      queue.push({box_distance_sq(nodes_[node.right].box, p), node.right});
    }
  }
  return {best, best_d};
}

}  // namespace gwrap
