#pragma once

#include <bathyreg/core.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace bathyreg {

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Exact k-d tree over an immutable snapshot of a cloud's points.
///
/// All queries are exact and ordered by (distance, index): equal distances
/// are broken by ascending point index, so results are identical to a
/// brute-force scan that sorts the same way. Squared distances are compared
/// internally; a point is within radius r when |p - q|^2 <= r^2.
class SpatialIndex {
 public:
  /// Throws Error("empty input") for an empty cloud.
  explicit SpatialIndex(const PointCloudd& cloud);
  explicit SpatialIndex(std::vector<Point3d> points);

  std::size_t size() const { return points_.size(); }
  const Point3d& point(std::size_t i) const { return points_[remap_inverse_[i]]; }

  /// The min(k, n) nearest points, ascending. k = 0 yields nothing.
  std::vector<Neighbor> knn(const Point3d& query, std::size_t k) const;
  void knn(const Point3d& query, std::size_t k, std::vector<Neighbor>& out) const;

  /// All points with distance <= radius, ascending.
  std::vector<Neighbor> radius_search(const Point3d& query, double radius) const;
  void radius_search(const Point3d& query, double radius, std::vector<Neighbor>& out) const;

  /// Nearest point with distance <= max_distance, if any.
  std::optional<Neighbor> nearest(const Point3d& query, double max_distance) const;

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;  // -1 marks a leaf
    std::int32_t right = -1;
    int axis = 0;
    double split = 0.0;
  };

  void build();
  std::int32_t build_node(std::uint32_t begin, std::uint32_t end);

  template <typename Visitor>
  void visit(const Point3d& query, double& bound_sq, Visitor&& visitor) const;

  std::vector<Point3d> points_;            // permuted into tree order
  std::vector<std::uint32_t> original_;    // tree slot -> source index
  std::vector<std::uint32_t> remap_inverse_;  // source index -> tree slot
  std::vector<Node> nodes_;
};

SpatialIndex build_index(const PointCloudd& cloud);
std::vector<Neighbor> knn(const SpatialIndex& index, const Point3d& query, std::size_t k);
std::vector<Neighbor> radius_search(const SpatialIndex& index, const Point3d& query, double radius);

}  // namespace bathyreg
