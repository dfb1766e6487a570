#include <bathyreg/features.hpp>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>

namespace bathyreg {

namespace {

constexpr double kPi = std::numbers::pi;

void normalize_blocks(FpfhVector& h) {
  for (int b = 0; b < 3; ++b) {
    auto block = h.segment<kFpfhBins>(b * kFpfhBins);
    const double s = block.sum();
    if (s > 0.0) block *= 100.0 / s;
  }
}

}  // namespace

PairFeature pair_feature(const Point3d& p_i, const Point3d& n_i, const Point3d& p_j, const Point3d& n_j) {
  const Point3d d = p_j - p_i;
  const double dist = d.norm();
  const Point3d& u = n_i;
  Point3d v = d.cross(u);
  const double vn = v.norm();
  if (vn > 1e-12 * dist) {
    v /= vn;
  } else {
    v.setZero();
  }
  const Point3d w = u.cross(v);
  return {v.dot(n_j), u.dot(d) / dist, std::atan2(w.dot(n_j), u.dot(n_j))};
}

int histogram_bin(double value, double lo, double hi) {
  const int bin = static_cast<int>(std::floor((value - lo) / (hi - lo) * kFpfhBins));
  return std::clamp(bin, 0, kFpfhBins - 1);
}

namespace {

FpfhVector spfh_from_neighbors(const PointCloudd& cloud, std::size_t i, const std::vector<Neighbor>& neighbors) {
  FpfhVector h = FpfhVector::Zero();
  for (const auto& nb : neighbors) {
    if (nb.index == i || nb.distance == 0.0) continue;
    const PairFeature f = pair_feature(cloud.points[i], cloud.normals[i], cloud.points[nb.index], cloud.normals[nb.index]);
    h[histogram_bin(f.alpha, -1.0, 1.0)] += 1.0;
    h[kFpfhBins + histogram_bin(f.phi, -1.0, 1.0)] += 1.0;
    h[2 * kFpfhBins + histogram_bin(f.theta, -kPi, kPi)] += 1.0;
  }
  normalize_blocks(h);
  return h;
}

}  // namespace

FpfhVector compute_spfh(const PointCloudd& cloud, const SpatialIndex& index, std::size_t point_idx, double radius) {
  if (!cloud.has_normals()) throw Error("cloud has no normals");
  return spfh_from_neighbors(cloud, point_idx, index.radius_search(cloud.points[point_idx], radius));
}

FeatureSet compute_fpfh(const PointCloudd& cloud, const SpatialIndex& index, double radius) {
  if (!cloud.has_normals()) throw Error("cloud has no normals");
  if (!(radius > 0.0)) throw Error("feature radius must be positive");
  const std::size_t n = cloud.size();
  std::vector<std::vector<Neighbor>> neighborhoods(n);
  std::vector<FpfhVector> spfh(n);
  for (std::size_t i = 0; i < n; ++i) {
    index.radius_search(cloud.points[i], radius, neighborhoods[i]);
    spfh[i] = spfh_from_neighbors(cloud, i, neighborhoods[i]);
  }

  FeatureSet out;
  out.descriptors.resize(static_cast<Eigen::Index>(n), kFpfhDim);
  out.point_indices.resize(n);
  std::iota(out.point_indices.begin(), out.point_indices.end(), std::size_t{0});
  for (std::size_t i = 0; i < n; ++i) {
    FpfhVector weighted = FpfhVector::Zero();
    std::size_t k = 0;
    for (const auto& nb : neighborhoods[i]) {
      if (nb.index == i || nb.distance == 0.0) continue;
      weighted += spfh[nb.index] / nb.distance;
      ++k;
    }
    FpfhVector f = spfh[i];
    if (k > 0) f += weighted / static_cast<double>(k);
    normalize_blocks(f);
    out.descriptors.row(static_cast<Eigen::Index>(i)) = f.transpose();
  }
  return out;
}

FeatureSet compute_fpfh(const PointCloudd& cloud, double radius) {
  if (!cloud.has_normals()) throw Error("cloud has no normals");
  return compute_fpfh(cloud, SpatialIndex(cloud), radius);
}

void write_features(const FeatureSet& features, const std::filesystem::path& path) {
  if (path.empty()) throw Error("I/O error: empty path");
  std::vector<std::uint8_t> bytes{'F', 'E', 'A', 'T'};
  auto put_u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  put_u32(kFeatVersion);
  put_u32(static_cast<std::uint32_t>(features.size()));
  put_u32(static_cast<std::uint32_t>(features.dim()));
  for (Eigen::Index r = 0; r < features.descriptors.rows(); ++r) {
    for (Eigen::Index c = 0; c < features.descriptors.cols(); ++c) {
      put_u32(std::bit_cast<std::uint32_t>(static_cast<float>(features.descriptors(r, c))));
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("I/O error: cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("I/O error: write failed for " + path.string());
}

FeatureSet read_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("I/O error: cannot open " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  auto get_u32 = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[at + static_cast<std::size_t>(i)]) << (8 * i);
    return v;
  };
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "FEAT", 4) != 0) throw Error("unrecognized format");
  if (bytes.size() < 16) throw Error("size mismatch");
  if (get_u32(4) != kFeatVersion) throw Error("unrecognized format: version");
  const std::size_t n = get_u32(8);
  const std::size_t dim = get_u32(12);
  if (bytes.size() != 16 + n * dim * 4) throw Error("size mismatch");
  FeatureSet fs;
  fs.descriptors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      const float v = std::bit_cast<float>(get_u32(16 + 4 * (r * dim + c)));
      if (!std::isfinite(v)) throw Error("invalid sample");
      fs.descriptors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  }
  fs.point_indices.resize(n);
  std::iota(fs.point_indices.begin(), fs.point_indices.end(), std::size_t{0});
  return fs;
}

}  // namespace bathyreg
