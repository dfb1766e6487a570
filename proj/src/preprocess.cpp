#include <bathyreg/preprocess.hpp>
#include <bathyreg/random.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>

namespace bathyreg {

namespace {

constexpr std::size_t kMinRadiusNeighbors = 5;
constexpr std::size_t kFallbackNeighbors = 10;

}  // namespace

VoxelKey voxel_key(const Point3d& p, const Point3d& origin, double voxel) {
  return {static_cast<std::int64_t>(std::floor((p.x() - origin.x()) / voxel)),
          static_cast<std::int64_t>(std::floor((p.y() - origin.y()) / voxel)),
          static_cast<std::int64_t>(std::floor((p.z() - origin.z()) / voxel))};
}

PointCloudd voxel_downsample(const PointCloudd& cloud, double voxel) {
  if (cloud.empty()) throw Error("empty input");
  if (!(voxel > 0.0)) throw Error("voxel size must be positive");

  Point3d origin = cloud.points.front();
  for (const auto& p : cloud.points) origin = origin.cwiseMin(p);

  std::vector<std::pair<VoxelKey, std::size_t>> keyed;
  keyed.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) keyed.emplace_back(voxel_key(cloud.points[i], origin, voxel), i);
  std::sort(keyed.begin(), keyed.end());

  PointCloudd out;
  for (std::size_t i = 0; i < keyed.size();) {
    std::size_t j = i;
    Point3d sum = Point3d::Zero();
    while (j < keyed.size() && keyed[j].first == keyed[i].first) sum += cloud.points[keyed[j++].second];
    out.points.push_back(sum / static_cast<double>(j - i));
    i = j;
  }
  return out;
}

std::vector<std::size_t> random_subset_indices(std::size_t n, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (count >= n) return idx;
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.index(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

PointCloudd random_cap(const PointCloudd& cloud, std::size_t max_points, std::uint64_t seed) {
  if (max_points == 0) throw Error("max_points must be >= 1");
  if (cloud.size() <= max_points) return cloud;
  PointCloudd out;
  const auto keep = random_subset_indices(cloud.size(), max_points, seed);
  out.points.reserve(keep.size());
  for (const auto i : keep) out.points.push_back(cloud.points[i]);
  if (cloud.has_normals()) {
    out.normals.reserve(keep.size());
    for (const auto i : keep) out.normals.push_back(cloud.normals[i]);
  }
  return out;
}

Matrix3d neighborhood_covariance(const PointCloudd& cloud, std::span<const Neighbor> neighbors) {
  Point3d mean = Point3d::Zero();
  for (const auto& nb : neighbors) mean += cloud.points[nb.index];
  mean /= static_cast<double>(neighbors.size());
  Matrix3d cov = Matrix3d::Zero();
  for (const auto& nb : neighbors) {
    const Point3d d = cloud.points[nb.index] - mean;
    cov.noalias() += d * d.transpose();
  }
  return cov / static_cast<double>(neighbors.size());
}

Point3d smallest_eigenvector(const Matrix3d& covariance) {
  Eigen::SelfAdjointEigenSolver<Matrix3d> solver;
  solver.compute(covariance);
  // Eigenvalues are sorted ascending.
  return solver.eigenvectors().col(0).normalized();
}

PointCloudd estimate_normals(const PointCloudd& cloud, const SpatialIndex& index, double radius) {
  if (cloud.size() < 3) throw Error("insufficient points");
  if (!(radius > 0.0)) throw Error("normal radius must be positive");
  PointCloudd out(cloud.points);
  out.normals.resize(cloud.size());
  std::vector<Neighbor> neighbors;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    index.radius_search(cloud.points[i], radius, neighbors);
    if (neighbors.size() < kMinRadiusNeighbors) index.knn(cloud.points[i], kFallbackNeighbors, neighbors);
    Point3d n = smallest_eigenvector(neighborhood_covariance(cloud, neighbors));
    if (n.z() < 0.0) n = -n;
    out.normals[i] = n;
  }
  return out;
}

PointCloudd estimate_normals(const PointCloudd& cloud, double radius) {
  if (cloud.size() < 3) throw Error("insufficient points");
  return estimate_normals(cloud, SpatialIndex(cloud), radius);
}

}  // namespace bathyreg
