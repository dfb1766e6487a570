#include <bathyreg/pairgen.hpp>
#include <bathyreg/preprocess.hpp>
#include <bathyreg/random.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

namespace bathyreg {

Point3d crop_direction(std::uint64_t seed) {
  Rng rng(seed);
  const double angle = 2.0 * std::numbers::pi * rng.uniform();
  return {std::cos(angle), std::sin(angle), 0.0};
}

std::size_t crop_retained_count(std::size_t n, double retain) {
  // The small slack keeps e.g. 0.7 * 10000 from rounding up to 7001.
  const double exact = retain * static_cast<double>(n);
  return std::min(n, static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact))));
}

PointCloudd crop_halfplane_along(const PointCloudd& cloud, double retain, const Point3d& direction) {
  if (cloud.empty()) throw Error("empty input");
  if (!(retain > 0.0 && retain <= 1.0)) throw Error("retain must be in (0, 1]");
  if (retain == 1.0) return cloud;
  const std::size_t n = cloud.size();
  const std::size_t keep = crop_retained_count(n, retain);
  std::vector<double> proj(n);
  for (std::size_t i = 0; i < n; ++i) proj[i] = cloud.points[i].dot(direction);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Descending projection, ascending index among equal projections.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return proj[a] > proj[b]; });
  order.resize(keep);
  std::sort(order.begin(), order.end());
  PointCloudd out;
  out.points.reserve(keep);
  for (const auto i : order) out.points.push_back(cloud.points[i]);
  if (cloud.has_normals()) {
    for (const auto i : order) out.normals.push_back(cloud.normals[i]);
  }
  return out;
}

PointCloudd crop_halfplane(const PointCloudd& cloud, double retain, std::uint64_t seed) {
  return crop_halfplane_along(cloud, retain, crop_direction(seed));
}

RigidTransformd sample_pair_transform(std::uint64_t seed, const TransformRanges& r) {
  if (r.yaw_min_deg > r.yaw_max_deg || r.xy_min > r.xy_max || r.z_min > r.z_max) {
    throw Error("config error: transform ranges must satisfy min <= max");
  }
  Rng rng(seed);
  const double yaw = rng.uniform(r.yaw_min_deg, r.yaw_max_deg);
  const double tx = rng.uniform(r.xy_min, r.xy_max);
  const double ty = rng.uniform(r.xy_min, r.xy_max);
  const double tz = rng.uniform(r.z_min, r.z_max);
  return transform_from_euler_z(yaw, Point3d(tx, ty, tz));
}

RigidTransformd pair_ground_truth(const PairSpec& spec, const TransformRanges& ranges) {
  return sample_pair_transform(hash_seed(spec.seed, "tf"), ranges);
}

namespace {

void add_noise(PointCloudd& cloud, double sigma, std::uint64_t seed) {
  if (sigma <= 0.0) return;
  Rng rng(seed);
  for (auto& p : cloud.points) {
    p += Point3d(rng.normal(0.0, sigma), rng.normal(0.0, sigma), rng.normal(0.0, sigma));
  }
}

}  // namespace

PairRecord make_pair(const Submap& ref, const Submap& src, const PairSpec& spec, const PairConfig& config) {
  if (ref.cloud.empty() || src.cloud.empty()) throw Error("degenerate crop");
  PointCloudd ref_crop = crop_halfplane(ref.cloud, config.retain, hash_seed(spec.seed, "ref"));
  PointCloudd src_crop = crop_halfplane(src.cloud, config.retain, hash_seed(spec.seed, "src"));
  if (ref_crop.empty() || src_crop.empty()) throw Error("degenerate crop");
  ref_crop = random_cap(ref_crop, config.max_points, hash_seed(spec.seed, "ref-cap"));
  src_crop = random_cap(src_crop, config.max_points, hash_seed(spec.seed, "src-cap"));

  const Point3d to_ref_frame = src.centroid_offset - ref.centroid_offset;
  if (!to_ref_frame.isZero(0.0)) {
    for (auto& p : src_crop.points) p += to_ref_frame;
  }

  PairRecord rec;
  rec.spec = spec;
  rec.gt = pair_ground_truth(spec, config.ranges);
  rec.ref_cloud = std::move(ref_crop);
  rec.src_cloud = apply_transform(src_crop, rec.gt.inverse());
  add_noise(rec.ref_cloud, config.noise_sigma, hash_seed(spec.seed, "ref-noise"));
  add_noise(rec.src_cloud, config.noise_sigma, hash_seed(spec.seed, "src-noise"));
  return rec;
}

int overlap_offset_steps(double nominal_overlap, std::size_t window, std::size_t step) {
  if (!(nominal_overlap > 0.0 && nominal_overlap <= 1.0)) throw Error("config error: overlap must be in (0, 1]");
  if (step == 0) throw Error("config error: step must be >= 1");
  return static_cast<int>(
      std::lround((1.0 - nominal_overlap) * static_cast<double>(window) / static_cast<double>(step)));
}

std::vector<PairSpec> enumerate_pairs(const DatasetManifest& manifest, const std::vector<double>& overlaps,
                                      std::uint64_t base_seed) {
  if (manifest.submaps.empty()) throw Error("empty manifest");
  std::set<int> ids;
  for (const auto& s : manifest.submaps) ids.insert(s.id);
  std::vector<PairSpec> out;
  for (const double o : overlaps) {
    const int k = overlap_offset_steps(o, manifest.window, manifest.step);
    for (const int i : ids) {
      if (!ids.contains(i + k)) continue;
      PairSpec spec;
      spec.pair_id = static_cast<int>(out.size());
      spec.ref_id = i;
      spec.src_id = i + k;
      spec.nominal_overlap = o;
      spec.effective_overlap = o * kCropOverlapFactor;
      spec.seed = hash_seed(base_seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(k));
      out.push_back(spec);
    }
  }
  return out;
}

nlohmann::json pair_entry_to_json(const PairEntry& e) {
  const auto& r = e.gt.rotation();
  const auto& t = e.gt.translation();
  nlohmann::json j;
  j["pair_id"] = e.spec.pair_id;
  j["ref_id"] = e.spec.ref_id;
  j["src_id"] = e.spec.src_id;
  j["nominal_overlap"] = e.spec.nominal_overlap;
  j["effective_overlap"] = e.spec.effective_overlap;
  j["seed"] = e.spec.seed;
  j["gt"] = {{"R", {r(0, 0), r(0, 1), r(0, 2), r(1, 0), r(1, 1), r(1, 2), r(2, 0), r(2, 1), r(2, 2)}},
             {"t", {t.x(), t.y(), t.z()}}};
  return j;
}

PairEntry pair_entry_from_json(const nlohmann::json& j) {
  try {
    PairEntry e;
    e.spec.pair_id = j.at("pair_id").get<int>();
    e.spec.ref_id = j.at("ref_id").get<int>();
    e.spec.src_id = j.at("src_id").get<int>();
    e.spec.nominal_overlap = j.at("nominal_overlap").get<double>();
    e.spec.effective_overlap = j.at("effective_overlap").get<double>();
    e.spec.seed = j.at("seed").get<std::uint64_t>();
    const auto& r = j.at("gt").at("R");
    const auto& t = j.at("gt").at("t");
    if (r.size() != 9 || t.size() != 3) throw Error("pair manifest: gt must have 9 + 3 values");
    Matrix3d rot;
    for (int k = 0; k < 9; ++k) rot(k / 3, k % 3) = r.at(static_cast<std::size_t>(k)).get<double>();
    e.gt = RigidTransformd::FromUserInput(rot, Point3d(t.at(0).get<double>(), t.at(1).get<double>(),
                                                       t.at(2).get<double>()));
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(std::string("pair manifest parse error: ") + ex.what());
  }
}

void write_pair_manifest(const std::vector<PairEntry>& pairs, const std::filesystem::path& path) {
  if (path.empty()) throw Error("I/O error: empty path");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("I/O error: cannot open " + path.string() + " for writing");
  for (const auto& p : pairs) out << pair_entry_to_json(p).dump() << '\n';
  if (!out) throw Error("I/O error: write failed for " + path.string());
}

std::vector<PairEntry> read_pair_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("I/O error: cannot open " + path.string());
  std::vector<PairEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(pair_entry_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

int overlap_bin_percent(double effective_overlap) {
  return static_cast<int>(std::lround(effective_overlap * 10.0)) * 10;
}

}  // namespace bathyreg
