#include <bathyreg/spatial.hpp>

#include <algorithm>
#include <limits>
#include <numeric>

namespace bathyreg {

namespace {

constexpr std::uint32_t kLeafSize = 12;

// Lexicographic (squared distance, index) ordering used for every result.
struct Candidate {
  double dist_sq;
  std::uint32_t index;
  friend bool operator<(const Candidate& a, const Candidate& b) {
    return a.dist_sq < b.dist_sq || (a.dist_sq == b.dist_sq && a.index < b.index);
  }
};

double squared_distance(const Point3d& a, const Point3d& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace

SpatialIndex::SpatialIndex(const PointCloudd& cloud) : SpatialIndex(cloud.points) {}

SpatialIndex::SpatialIndex(std::vector<Point3d> points) : points_(std::move(points)) {
  if (points_.empty()) throw Error("empty input");
  if (points_.size() >= std::numeric_limits<std::uint32_t>::max()) throw Error("cloud too large for index");
  build();
}

void SpatialIndex::build() {
  const auto n = static_cast<std::uint32_t>(points_.size());
  original_.resize(n);
  std::iota(original_.begin(), original_.end(), 0U);
  nodes_.reserve(2 * (n / kLeafSize + 1));
  build_node(0, n);

  std::vector<Point3d> permuted(n);
  remap_inverse_.resize(n);
  for (std::uint32_t slot = 0; slot < n; ++slot) {
    permuted[slot] = points_[original_[slot]];
    remap_inverse_[original_[slot]] = slot;
  }
  points_ = std::move(permuted);
}

std::int32_t SpatialIndex::build_node(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end, -1, -1, 0, 0.0});
  if (end - begin <= kLeafSize) return id;

  Point3d lo = Point3d::Constant(std::numeric_limits<double>::infinity());
  Point3d hi = -lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[original_[i]]);
    hi = hi.cwiseMax(points_[original_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all coincident: keep as one leaf

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(original_.begin() + begin, original_.begin() + mid, original_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double ca = points_[a][axis];
                     const double cb = points_[b][axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  const double split = points_[original_[mid]][axis];

  const std::int32_t left = build_node(begin, mid);
  const std::int32_t right = build_node(mid, end);
  Node& node = nodes_[static_cast<std::size_t>(id)];
  node.left = left;
  node.right = right;
  node.axis = axis;
  node.split = split;
  return id;
}

// Depth-first traversal; the far side of a split is entered whenever the
// plane is within the (inclusive) bound so exact ties are never pruned.
template <typename Visitor>
void SpatialIndex::visit(const Point3d& query, double& bound_sq, Visitor&& visitor) const {
  struct Pending {
    std::int32_t node;
    double min_dist_sq;  // lower bound on distance to anything in the node
  };
  Pending stack[128];
  int top = 0;
  stack[top++] = {0, 0.0};
  while (top > 0) {
    const Pending pending = stack[--top];
    if (pending.min_dist_sq > bound_sq) continue;
    const Node& node = nodes_[static_cast<std::size_t>(pending.node)];
    if (node.left < 0) {
      for (std::uint32_t slot = node.begin; slot < node.end; ++slot) {
        visitor(slot, squared_distance(points_[slot], query));
      }
      continue;
    }
    const double diff = query[node.axis] - node.split;
    const std::int32_t near = diff < 0.0 ? node.left : node.right;
    const std::int32_t far = diff < 0.0 ? node.right : node.left;
    const double far_bound = std::max(pending.min_dist_sq, diff * diff);
    if (far_bound <= bound_sq) stack[top++] = {far, far_bound};
    stack[top++] = {near, pending.min_dist_sq};
  }
}

void SpatialIndex::knn(const Point3d& query, std::size_t k, std::vector<Neighbor>& out) const {
  out.clear();
  if (k == 0) return;
  k = std::min(k, points_.size());
  std::vector<Candidate> heap;
  heap.reserve(k);
  double bound = std::numeric_limits<double>::infinity();
  visit(query, bound, [&](std::uint32_t slot, double d2) {
    const Candidate c{d2, original_[slot]};
    if (heap.size() < k) {
      heap.push_back(c);
      std::push_heap(heap.begin(), heap.end());
      if (heap.size() == k) bound = heap.front().dist_sq;
    } else if (c < heap.front()) {
      std::pop_heap(heap.begin(), heap.end());
      heap.back() = c;
      std::push_heap(heap.begin(), heap.end());
      bound = heap.front().dist_sq;
    }
  });
  std::sort_heap(heap.begin(), heap.end());
  out.reserve(heap.size());
  for (const auto& c : heap) out.push_back({c.index, std::sqrt(c.dist_sq)});
}

std::vector<Neighbor> SpatialIndex::knn(const Point3d& query, std::size_t k) const {
  std::vector<Neighbor> out;
  knn(query, k, out);
  return out;
}

void SpatialIndex::radius_search(const Point3d& query, double radius, std::vector<Neighbor>& out) const {
  out.clear();
  if (!(radius >= 0.0)) return;
  double bound = radius * radius;
  std::vector<Candidate> found;
  visit(query, bound, [&](std::uint32_t slot, double d2) {
    if (d2 <= bound) found.push_back({d2, original_[slot]});
  });
  std::sort(found.begin(), found.end());
  out.reserve(found.size());
  for (const auto& c : found) out.push_back({c.index, std::sqrt(c.dist_sq)});
}

std::vector<Neighbor> SpatialIndex::radius_search(const Point3d& query, double radius) const {
  std::vector<Neighbor> out;
  radius_search(query, radius, out);
  return out;
}

std::optional<Neighbor> SpatialIndex::nearest(const Point3d& query, double max_distance) const {
  if (!(max_distance >= 0.0)) return std::nullopt;
  double bound = max_distance * max_distance;
  std::optional<Candidate> best;
  visit(query, bound, [&](std::uint32_t slot, double d2) {
    const Candidate c{d2, original_[slot]};
    if (d2 <= bound && (!best || c < *best)) {
      best = c;
      bound = d2;
    }
  });
  if (!best) return std::nullopt;
  return Neighbor{best->index, std::sqrt(best->dist_sq)};
}

SpatialIndex build_index(const PointCloudd& cloud) { return SpatialIndex(cloud); }

std::vector<Neighbor> knn(const SpatialIndex& index, const Point3d& query, std::size_t k) {
  return index.knn(query, k);
}

std::vector<Neighbor> radius_search(const SpatialIndex& index, const Point3d& query, double radius) {
  return index.radius_search(query, radius);
}

}  // namespace bathyreg
