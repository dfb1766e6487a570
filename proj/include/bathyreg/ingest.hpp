#pragma once

#include <bathyreg/core.hpp>

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace bathyreg {

/// Raw survey: n_pings x n_beams Cartesian hits, row-major, ping-major.
/// An invalid beam is NaN in all three coordinates; every other triple is
/// fully finite.
class PingTensor {
 public:
  PingTensor() = default;
  /// Validates shape and sample invariants; throws Error("invalid sample")
  /// on +-Inf or on partially-NaN triples.
  PingTensor(std::size_t n_pings, std::size_t n_beams, std::vector<double> hits);

  std::size_t n_pings() const { return n_pings_; }
  std::size_t n_beams() const { return n_beams_; }
  const std::vector<double>& data() const { return hits_; }

  Point3d hit(std::size_t ping, std::size_t beam) const {
    const std::size_t o = offset(ping, beam);
    return {hits_[o], hits_[o + 1], hits_[o + 2]};
  }
  bool is_valid(std::size_t ping, std::size_t beam) const { return !std::isnan(hits_[offset(ping, beam)]); }
  std::size_t count_valid() const;

  friend bool operator==(const PingTensor&, const PingTensor&) = default;

 private:
  std::size_t offset(std::size_t ping, std::size_t beam) const { return (ping * n_beams_ + beam) * 3; }

  std::size_t n_pings_ = 0;
  std::size_t n_beams_ = 0;
  std::vector<double> hits_;
};

/// MBPT binary layout: "MBPT", u32 version = 1, u32 n_pings, u32 n_beams
/// (all little-endian), then n_pings * n_beams * 3 float64 LE.
inline constexpr std::size_t kMbptHeaderBytes = 16;
inline constexpr std::uint32_t kMbptVersion = 1;

PingTensor read_ping_tensor(const std::filesystem::path& path);
void write_ping_tensor(const PingTensor& tensor, const std::filesystem::path& path);

std::vector<std::uint8_t> encode_ping_tensor(const PingTensor& tensor);
PingTensor decode_ping_tensor(const std::vector<std::uint8_t>& bytes);

/// CSV with header "ping_idx,beam_idx,x,y,z"; one row per beam, "nan" for
/// invalid beams. Missing rows read back as invalid beams.
PingTensor read_ping_csv(const std::filesystem::path& path);
void write_ping_csv(const PingTensor& tensor, const std::filesystem::path& path);

/// Clouds are stored as MBPT files with n_beams = 1 (one point per "ping").
PointCloudd read_cloud(const std::filesystem::path& path);
void write_cloud(const PointCloudd& cloud, const std::filesystem::path& path);

struct Submap {
  int id = 0;
  std::size_t start = 0;  // first ping, inclusive
  std::size_t end = 0;    // one past the last ping
  PointCloudd cloud;      // valid hits only, recentered
  Point3d centroid_offset = Point3d::Zero();  // absolute = cloud point + offset
};

/// Valid hits of pings [start, end), recentered at their centroid.
Submap make_submap(const PingTensor& tensor, int id, std::size_t start, std::size_t end);

/// Windows at ping offsets 0, step, 2 step, ... while offset + window <= n_pings.
/// Throws Error("survey too short") when window > n_pings.
std::vector<Submap> build_submaps(const PingTensor& tensor, std::size_t window = 100, std::size_t step = 20);

inline std::size_t expected_submap_count(std::size_t n_pings, std::size_t window, std::size_t step) {
  return n_pings < window ? 0 : (n_pings - window) / step + 1;
}

/// Ping interval [start, end) assigned to a named split.
struct SplitBoundary {
  std::string name;
  std::size_t start = 0;
  std::size_t end = 0;
};

struct SubmapEntry {
  int id = 0;
  std::size_t start = 0;
  std::size_t end = 0;
  Point3d centroid_offset = Point3d::Zero();
  friend bool operator==(const SubmapEntry&, const SubmapEntry&) = default;
};

struct DatasetManifest {
  std::string split;
  std::size_t window = 100;
  std::size_t step = 20;
  std::string source;
  std::uint64_t seed = 0;
  std::vector<SubmapEntry> submaps;
};

/// One manifest per boundary, in boundary order. A submap belongs to the
/// split whose interval contains its whole ping range; straddlers are
/// dropped. Throws Error("config error: ...") for overlapping intervals.
std::vector<DatasetManifest> split_dataset(const std::vector<Submap>& submaps,
                                           const std::vector<SplitBoundary>& boundaries, std::size_t window,
                                           std::size_t step);

/// Boundaries covering [0, n_pings) in consecutive fractions (e.g. 0.6/0.2/0.2).
std::vector<SplitBoundary> boundaries_from_fractions(std::size_t n_pings, const std::vector<std::string>& names,
                                                     const std::vector<double>& fractions);

nlohmann::json manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const nlohmann::json& json);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace bathyreg
