#pragma once

#include <bathyreg/core.hpp>
#include <bathyreg/spatial.hpp>

#include <Eigen/Core>

#include <filesystem>
#include <vector>

namespace bathyreg {

inline constexpr int kFpfhBins = 11;
inline constexpr int kFpfhDim = 3 * kFpfhBins;
inline constexpr double kDefaultFeatureRadius = 5.0;

using FpfhVector = Eigen::Matrix<double, kFpfhDim, 1>;
using DescriptorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Row i describes cloud point point_indices[i].
struct FeatureSet {
  DescriptorMatrix descriptors;
  std::vector<std::size_t> point_indices;

  std::size_t size() const { return static_cast<std::size_t>(descriptors.rows()); }
  int dim() const { return static_cast<int>(descriptors.cols()); }
};

/// Angular features of the Darboux frame (u = n_i, v = (p_j - p_i) x u / |.|, w = u x v).
struct PairFeature {
  double alpha;  // v . n_j, in [-1, 1]
  double phi;    // u . (p_j - p_i) / |p_j - p_i|, in [-1, 1]
  double theta;  // atan2(w . n_j, u . n_j), in (-pi, pi]
};

/// v and w collapse to zero when the offset is parallel to n_i.
PairFeature pair_feature(const Point3d& p_i, const Point3d& n_i, const Point3d& p_j, const Point3d& n_j);

/// Bin of `value` among kFpfhBins uniform bins over [lo, hi], clamped.
int histogram_bin(double value, double lo, double hi);

/// Simplified point feature histogram: three 11-bin blocks over (alpha, phi,
/// theta) for the neighbours within `radius`, each block summing to 100.
/// Coincident neighbours are skipped; an isolated point yields zeros.
FpfhVector compute_spfh(const PointCloudd& cloud, const SpatialIndex& index, std::size_t point_idx, double radius);

/// SPFH(p_i) + (1/K) sum_j SPFH(p_j) / |p_j - p_i| over the K neighbours in
/// `radius`, each block renormalised to 100. Throws Error without normals.
FeatureSet compute_fpfh(const PointCloudd& cloud, double radius = kDefaultFeatureRadius);
FeatureSet compute_fpfh(const PointCloudd& cloud, const SpatialIndex& index, double radius);

/// FEAT dump: "FEAT", u32 version = 1, u32 n, u32 dim (LE), then n x dim float32 LE.
inline constexpr std::uint32_t kFeatVersion = 1;
void write_features(const FeatureSet& features, const std::filesystem::path& path);
/// Row i of the file describes cloud point i.
FeatureSet read_features(const std::filesystem::path& path);

}  // namespace bathyreg
