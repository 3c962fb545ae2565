#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "graspmimic/types.hpp"

namespace graspmimic {

struct NearestHit {
  std::uint32_t index = 0;
  double squared_distance = std::numeric_limits<double>::infinity();

  double distance() const { return std::sqrt(squared_distance); }
};

/// Exact nearest-neighbour index over a fixed point set.
///
/// Results are identical to a linear scan, including tie-breaking: among points
/// at the same squared distance the lowest index wins.
class KdTree {
 public:
  KdTree() = default;

  explicit KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    if (!points_.empty()) {
      nodes_.reserve(2 * points_.size() / kLeafSize + 2);
      build(0, static_cast<std::uint32_t>(points_.size()));
    }
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const std::vector<Vec3>& points() const { return points_; }

  NearestHit nearest(const Vec3& query) const {
    NearestHit best;
    if (!nodes_.empty()) search(0, query, best);
    return best;
  }

 private:
  static constexpr std::uint32_t kLeafSize = 8;

  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::uint32_t left = 0;  // children are only meaningful when !leaf
    std::uint32_t right = 0;
    int axis = -1;           // -1 marks a leaf
    double split = 0.0;
    Aabb box;
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back({});
    Aabb box;
    for (std::uint32_t i = begin; i < end; ++i) box.extend(points_[order_[i]]);
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    nodes_[id].box = box;
    if (end - begin <= kLeafSize) return id;

    int axis = 0;
    box.extent().maxCoeff(&axis);
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       const double pa = points_[a][axis];
                       const double pb = points_[b][axis];
                       return pa < pb || (pa == pb && a < b);
                     });
    const double split = points_[order_[mid]][axis];
    const std::uint32_t left = build(begin, mid);
    const std::uint32_t right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  static bool better(double d2, std::uint32_t idx, const NearestHit& best) {
    return d2 < best.squared_distance || (d2 == best.squared_distance && idx < best.index);
  }

  void search(std::uint32_t id, const Vec3& q, NearestHit& best) const {
    const Node& node = nodes_[id];
    // Equal bound is still explored so a lower-index tie can replace the current best.
    if (node.box.squared_distance(q) > best.squared_distance) return;
    if (node.axis < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::uint32_t idx = order_[i];
        const double d2 = (points_[idx] - q).squaredNorm();
        if (better(d2, idx, best)) best = {idx, d2};
      }
      return;
    }
    const bool go_left = q[node.axis] < node.split;
    search(go_left ? node.left : node.right, q, best);
    search(go_left ? node.right : node.left, q, best);
  }

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Reference linear scan with the same tie-breaking rule as KdTree.
inline NearestHit brute_force_nearest(std::span<const Vec3> points, const Vec3& query) {
  NearestHit best;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d2 = (points[i] - query).squaredNorm();
    if (d2 < best.squared_distance) best = {static_cast<std::uint32_t>(i), d2};
  }
  return best;
}

}  // namespace graspmimic
