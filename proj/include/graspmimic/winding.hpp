#pragma once

#include <algorithm>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "graspmimic/types.hpp"

namespace graspmimic {

/// Signed solid angle of triangle (a, b, c) seen from p (Van Oosterom-Strackee).
/// Positive when p lies on the side opposite the triangle's CCW normal.
inline double triangle_solid_angle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ra = a - p;
  const Vec3 rb = b - p;
  const Vec3 rc = c - p;
  const double la = ra.norm();
  const double lb = rb.norm();
  const double lc = rc.norm();
  const double numerator = ra.dot(rb.cross(rc));
  const double denominator = la * lb * lc + ra.dot(rb) * lc + ra.dot(rc) * lb + rb.dot(rc) * la;
  return 2.0 * std::atan2(numerator, denominator);
}

/// Exact generalized winding number: sum of face solid angles over 4*pi.
inline double winding_number_exact(const Vec3& p, std::span<const Vec3> vertices,
                                   std::span<const Face> faces) {
  double total = 0.0;
  for (const Face& f : faces) {
    total += triangle_solid_angle(p, vertices[f[0]], vertices[f[1]], vertices[f[2]]);
  }
  return total / (4.0 * std::numbers::pi);
}

/// Hierarchical winding-number evaluator.
///
/// Clusters of triangles far from the query (distance > accuracy * cluster radius)
/// are replaced by their first-order dipole term; near clusters are summed exactly.
class WindingTree {
 public:
  WindingTree() = default;

  WindingTree(std::span<const Vec3> vertices, std::span<const Face> faces, double accuracy = 2.0)
      : vertices_(vertices.begin(), vertices.end()), faces_(faces.begin(), faces.end()),
        accuracy_(accuracy) {
    order_.resize(faces_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    centroids_.reserve(faces_.size());
    for (const Face& f : faces_) {
      centroids_.push_back((vertices_[f[0]] + vertices_[f[1]] + vertices_[f[2]]) / 3.0);
    }
    if (!faces_.empty()) build(0, static_cast<std::uint32_t>(faces_.size()));
  }

  bool empty() const { return faces_.empty(); }

  double evaluate(const Vec3& p) const {
    if (nodes_.empty()) return 0.0;
    return evaluate_node(0, p) / (4.0 * std::numbers::pi);
  }

  double evaluate_exact(const Vec3& p) const { return winding_number_exact(p, vertices_, faces_); }

 private:
  static constexpr std::uint32_t kLeafSize = 8;

  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    bool leaf = true;
    Vec3 center = Vec3::Zero();        // area-weighted centroid
    Vec3 area_vector = Vec3::Zero();   // sum of face area vectors
    double radius = 0.0;
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back({});
    Node node;
    node.begin = begin;
    node.end = end;

    Aabb box;
    double area_sum = 0.0;
    Vec3 weighted = Vec3::Zero();
    for (std::uint32_t i = begin; i < end; ++i) {
      const Face& f = faces_[order_[i]];
      const Vec3 av = 0.5 * (vertices_[f[1]] - vertices_[f[0]]).cross(vertices_[f[2]] - vertices_[f[0]]);
      const double area = av.norm();
      node.area_vector += av;
      weighted += area * centroids_[order_[i]];
      area_sum += area;
      box.extend(centroids_[order_[i]]);
    }
    node.center = area_sum > 0.0 ? Vec3(weighted / area_sum) : centroids_[order_[begin]];
    for (std::uint32_t i = begin; i < end; ++i) {
      const Face& f = faces_[order_[i]];
      for (std::uint32_t v : f) node.radius = std::max(node.radius, (vertices_[v] - node.center).norm());
    }

    if (end - begin > kLeafSize) {
      int axis = 0;
      box.extent().maxCoeff(&axis);
      const std::uint32_t mid = begin + (end - begin) / 2;
      std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                       [&](std::uint32_t a, std::uint32_t b) {
                         return centroids_[a][axis] < centroids_[b][axis] ||
                                (centroids_[a][axis] == centroids_[b][axis] && a < b);
                       });
      node.leaf = false;
      nodes_[id] = node;
      const std::uint32_t left = build(begin, mid);
      const std::uint32_t right = build(mid, end);
      nodes_[id].left = left;
      nodes_[id].right = right;
      return id;
    }
    nodes_[id] = node;
    return id;
  }

  double evaluate_node(std::uint32_t id, const Vec3& p) const {
    const Node& node = nodes_[id];
    const Vec3 r = node.center - p;
    const double dist = r.norm();
    if (dist > accuracy_ * node.radius) {
      return node.area_vector.dot(r) / (dist * dist * dist);
    }
    if (node.leaf) {
      double total = 0.0;
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const Face& f = faces_[order_[i]];
        total += triangle_solid_angle(p, vertices_[f[0]], vertices_[f[1]], vertices_[f[2]]);
      }
      return total;
    }
    return evaluate_node(node.left, p) + evaluate_node(node.right, p);
  }

  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  std::vector<Vec3> centroids_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  double accuracy_ = 2.0;
};

}  // namespace graspmimic
