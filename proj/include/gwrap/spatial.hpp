#pragma once

#include <cstdint>
#include <functional>
#include <type_traits>
#include <utility>
#include <vector>

#include "gwrap/types.hpp"

namespace gwrap {

/// Exact k-d tree over a fixed point set. Queries return indices into the
/// original point array.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::vector<Vec3> points);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  /// Index and squared distance of the closest point. Requires a non-empty tree.
  std::pair<std::size_t, double> nearest(const Vec3& q) const;

  /// Up to k closest points, sorted by (distance, index) ascending.
  std::vector<std::pair<std::size_t, double>> knn(const Vec3& q, std::size_t k) const;

 private:
  struct Node {
    double split = 0.0;
    std::int32_t left = -1, right = -1;
    std::uint32_t begin = 0, end = 0;
    std::uint8_t axis = 0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end, int depth);

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  static constexpr std::uint32_t kLeafSize = 8;
};

/// Bounding volume hierarchy over axis-aligned boxes. Items are identified by
/// their position in the input array; visitors see candidate items whose box
/// passes the query, in no particular order.
class Bvh {
 public:
  Bvh() = default;
  explicit Bvh(std::vector<Aabb> boxes);

  std::size_t size() const { return boxes_.size(); }
  const Aabb& box(std::size_t i) const { return boxes_[i]; }

  /// Visits items whose box intersects the ray segment [tmin, tmax].
  /// The visitor may shrink `tmax` (first-hit queries) by returning a new bound.
  void visit_ray(const Ray& ray, double tmin, double tmax,
                 const std::function<double(std::size_t, double)>& visitor) const;

  /// Same as visit_ray without the shrinking bound. A visitor returning bool
  /// stops the traversal by returning false.
  template <typename F>
  void for_each_on_ray(const Ray& ray, double tmin, double tmax, F&& visitor) const;

  /// Visits items whose box contains p.
  template <typename F>
  void for_each_containing(const Vec3& p, F&& visitor) const;

  /// Smallest value of `distance(item)` over all items, using box distances
  /// as lower bounds. Returns {index, distance}; index is size() when empty.
  std::pair<std::size_t, double> nearest(
      const Vec3& p, const std::function<double(std::size_t)>& distance) const;

 private:
  struct Node {
    Aabb box;
    std::int32_t left = -1, right = -1;
    std::uint32_t begin = 0, end = 0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  static bool slab(const Aabb& b, const Vec3& origin, const Vec3& inv_dir, double tmin,
                   double tmax);

  std::vector<Aabb> boxes_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  static constexpr std::uint32_t kLeafSize = 4;
};

template <typename F>
void Bvh::for_each_on_ray(const Ray& ray, double tmin, double tmax, F&& visitor) const {
  if (nodes_.empty()) return;
  const Vec3 inv = ray.direction.cwiseInverse();
  std::int32_t stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (!slab(node.box, ray.origin, inv, tmin, tmax)) continue;
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        if (!slab(boxes_[order_[i]], ray.origin, inv, tmin, tmax)) continue;
        if constexpr (std::is_same_v<std::invoke_result_t<F, std::size_t>, bool>) {
          if (!visitor(order_[i])) return;
        } else {
          visitor(order_[i]);
        }
      }
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
}

template <typename F>
void Bvh::for_each_containing(const Vec3& p, F&& visitor) const {
  if (nodes_.empty()) return;
  std::int32_t stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (!node.box.contains(p)) continue;
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        if (boxes_[order_[i]].contains(p)) visitor(order_[i]);
      }
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
}

}  // namespace gwrap
