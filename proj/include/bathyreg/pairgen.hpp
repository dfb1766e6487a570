#pragma once

#include <bathyreg/core.hpp>
#include <bathyreg/ingest.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace bathyreg {

/// Two independent 70% crops keep ~0.7 * 0.7 of the original overlap.
inline constexpr double kCropOverlapFactor = 0.49;
inline constexpr double kDefaultRetain = 0.7;

struct PairSpec {
  int pair_id = 0;
  int ref_id = 0;
  int src_id = 0;
  double nominal_overlap = 1.0;
  double effective_overlap = kCropOverlapFactor;
  std::uint64_t seed = 0;
  friend bool operator==(const PairSpec&, const PairSpec&) = default;
};

/// Sampling box for the synthetic misalignment.
struct TransformRanges {
  double yaw_min_deg = 0.0, yaw_max_deg = 10.0;
  double xy_min = -40.0, xy_max = 40.0;
  double z_min = -2.0, z_max = 2.0;

  static TransformRanges Zero() { return {0, 0, 0, 0, 0, 0}; }
};

struct PairConfig {
  double retain = kDefaultRetain;
  std::size_t max_points = 10000;
  TransformRanges ranges;
  double noise_sigma = 0.0;  // optional isotropic noise (m) on both clouds; off by default
};

/// ref_cloud and src_cloud are post-crop, post-cap; gt maps src_cloud into
/// ref_cloud's frame.
struct PairRecord {
  PairSpec spec;
  PointCloudd ref_cloud;
  PointCloudd src_cloud;
  RigidTransformd gt;
};

/// d = (cos a, sin a, 0) with a ~ U[0, 2 pi) drawn from `seed`.
Point3d crop_direction(std::uint64_t seed);

/// Keeps exactly ceil(retain * n) points with the largest projections onto
/// `direction` (ties by ascending index), in their original order.
PointCloudd crop_halfplane_along(const PointCloudd& cloud, double retain, const Point3d& direction);
PointCloudd crop_halfplane(const PointCloudd& cloud, double retain, std::uint64_t seed);

std::size_t crop_retained_count(std::size_t n, double retain);

/// yaw ~ U[yaw range] about +Z; tx, ty ~ U[xy range] independently; tz ~ U[z range].
RigidTransformd sample_pair_transform(std::uint64_t seed, const TransformRanges& ranges = {});

/// Ground truth for a pair seed; identical to the one make_pair uses.
RigidTransformd pair_ground_truth(const PairSpec& spec, const TransformRanges& ranges);

/// Crops both (already downsampled) submaps independently, caps them, moves
/// the source crop into the reference submap frame and then by T^-1, so
/// that gt = T. Throws Error("degenerate crop") if either crop is empty.
PairRecord make_pair(const Submap& ref, const Submap& src, const PairSpec& spec, const PairConfig& config = {});

/// k(o) = round((1 - o) * window / step) submap steps between partners.
int overlap_offset_steps(double nominal_overlap, std::size_t window, std::size_t step);

/// For each overlap (in the given order) and each submap id i of the
/// manifest, emits (i, i + k) when the partner is in the same manifest.
/// pair ids are sequential in emission order; seed = hash(base_seed, i, k).
std::vector<PairSpec> enumerate_pairs(const DatasetManifest& manifest, const std::vector<double>& overlaps,
                                      std::uint64_t base_seed);

struct PairEntry {
  PairSpec spec;
  RigidTransformd gt;
};

nlohmann::json pair_entry_to_json(const PairEntry& entry);
PairEntry pair_entry_from_json(const nlohmann::json& json);
void write_pair_manifest(const std::vector<PairEntry>& pairs, const std::filesystem::path& path);
std::vector<PairEntry> read_pair_manifest(const std::filesystem::path& path);

/// Effective-overlap bin label in percent (nearest multiple of 10).
int overlap_bin_percent(double effective_overlap);

}  // namespace bathyreg
