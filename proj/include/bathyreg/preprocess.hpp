#pragma once

#include <bathyreg/core.hpp>
#include <bathyreg/spatial.hpp>

#include <array>
#include <cstdint>
#include <span>

namespace bathyreg {

inline constexpr double kDefaultVoxelSize = 1.0;
inline constexpr std::size_t kDefaultMaxPoints = 10000;
inline constexpr double kDefaultNormalRadius = 5.0;

/// Integer voxel coordinates: floor((p - origin) / voxel), origin being the
/// cloud's minimum corner.
using VoxelKey = std::array<std::int64_t, 3>;

VoxelKey voxel_key(const Point3d& p, const Point3d& origin, double voxel);

/// One point per occupied voxel (the centroid of its members), ordered by
/// VoxelKey lexicographically. Normals are not carried over.
PointCloudd voxel_downsample(const PointCloudd& cloud, double voxel = kDefaultVoxelSize);

/// Identity when cloud.size() <= max_points, otherwise a uniform random
/// subset of exactly max_points points kept in their original order.
PointCloudd random_cap(const PointCloudd& cloud, std::size_t max_points, std::uint64_t seed);

/// Indices chosen by random_cap, ascending.
std::vector<std::size_t> random_subset_indices(std::size_t n, std::size_t count, std::uint64_t seed);

/// Mean-centred scatter of the given neighbours divided by their count.
Matrix3d neighborhood_covariance(const PointCloudd& cloud, std::span<const Neighbor> neighbors);

/// Unit eigenvector of the smallest eigenvalue of `covariance`.
Point3d smallest_eigenvector(const Matrix3d& covariance);

/// PCA normals from radius neighbourhoods (falling back to the 10 nearest
/// points when fewer than 5 lie within `radius`), oriented so n_z >= 0.
/// Throws Error("insufficient points") for clouds with fewer than 3 points.
PointCloudd estimate_normals(const PointCloudd& cloud, double radius = kDefaultNormalRadius);
PointCloudd estimate_normals(const PointCloudd& cloud, const SpatialIndex& index, double radius);

}  // namespace bathyreg
