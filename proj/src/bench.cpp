#include <bathyreg/bench.hpp>
#include <bathyreg/preprocess.hpp>
#include <bathyreg/random.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <thread>

namespace bathyreg {

// ---------------------------------------------------------------------------
// Config

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size() || !std::isfinite(v)) {
    throw Error("config error: " + key + ": expected a number, got '" + value + "'");
  }
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw Error("config error: " + key + ": expected a non-negative integer, got '" + value + "'");
  }
  return v;
}

int to_int(const std::string& key, const std::string& value) {
  const auto v = to_u64(key, value);
  if (v > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) throw Error("config error: " + key + ": out of range");
  return static_cast<int>(v);
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw Error("config error: " + key + ": expected true/false, got '" + value + "'");
}

double positive(const std::string& key, double v) {
  if (!(v > 0.0)) throw Error("config error: " + key + " must be positive");
  return v;
}

double non_negative(const std::string& key, double v) {
  if (v < 0.0) throw Error("config error: " + key + " must be non-negative");
  return v;
}

}  // namespace

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(to_double("list", item));
  if (out.empty()) throw Error("config error: empty list");
  return out;
}

void apply_config_entry(BenchConfig& c, const std::string& key, const std::string& value) {
  using Setter = std::function<void(const std::string&)>;
  auto num = [&](double& field, bool must_be_positive = false) -> Setter {
    return [&field, &key, must_be_positive](const std::string& v) {
      field = must_be_positive ? positive(key, to_double(key, v)) : to_double(key, v);
    };
  };
  auto nonneg = [&](double& field) -> Setter {
    return [&field, &key](const std::string& v) { field = non_negative(key, to_double(key, v)); };
  };
  auto count = [&](std::size_t& field) -> Setter {
    return [&field, &key](const std::string& v) {
      field = static_cast<std::size_t>(to_u64(key, v));
      if (field == 0) throw Error("config error: " + key + " must be >= 1");
    };
  };
  auto integer = [&](int& field) -> Setter {
    return [&field, &key](const std::string& v) {
      field = to_int(key, v);
      if (field == 0) throw Error("config error: " + key + " must be >= 1");
    };
  };

  const std::map<std::string, Setter, std::less<>> setters = {
      {"seed", [&](const std::string& v) { c.seed = to_u64(key, v); }},
      {"terrain.extent_x", num(c.terrain.extent_x, true)},
      {"terrain.extent_y", num(c.terrain.extent_y, true)},
      {"terrain.base_depth", num(c.terrain.base_depth)},
      {"terrain.origin_x", num(c.terrain.origin_x)},
      {"terrain.origin_y", num(c.terrain.origin_y)},
      {"terrain.spectrum",
       [&](const std::string& v) {
         // "wavelength:amplitude, ..."; an empty value gives a flat seafloor.
         std::vector<SpectralComponent> spectrum;
         for (const auto& item : split(v, ',')) {
           const auto parts = split(item, ':');
           if (parts.size() != 2) throw Error("config error: " + key + ": expected wavelength:amplitude");
           spectrum.push_back({to_double(key, parts[0]), to_double(key, parts[1])});
         }
         c.terrain.spectrum = std::move(spectrum);
       }},
      {"terrain.roughness_sigma", nonneg(c.terrain.roughness_sigma)},
      {"terrain.roughness_length", num(c.terrain.roughness_length, true)},
      {"terrain.noise_sigma", nonneg(c.terrain.noise_sigma)},
      {"terrain.dropout", nonneg(c.terrain.dropout)},
      {"survey.n_pings", count(c.survey.n_pings)},
      {"survey.n_beams", count(c.survey.n_beams)},
      {"survey.swath_width", num(c.survey.swath_width, true)},
      {"survey.along_track_step", num(c.survey.along_track_step, true)},
      {"submap.window", count(c.window)},
      {"submap.step", count(c.step)},
      {"split.names", [&](const std::string& v) { c.split_names = split(v, ','); }},
      {"split.fractions", [&](const std::string& v) { c.split_fractions = parse_double_list(v); }},
      {"pairs.overlaps", [&](const std::string& v) { c.overlaps = parse_double_list(v); }},
      {"pairs.retain", num(c.pair.retain, true)},
      {"pairs.max_points", count(c.pair.max_points)},
      {"pairs.yaw_min_deg", num(c.pair.ranges.yaw_min_deg)},
      {"pairs.yaw_max_deg", num(c.pair.ranges.yaw_max_deg)},
      {"pairs.xy_min", num(c.pair.ranges.xy_min)},
      {"pairs.xy_max", num(c.pair.ranges.xy_max)},
      {"pairs.z_min", num(c.pair.ranges.z_min)},
      {"pairs.z_max", num(c.pair.ranges.z_max)},
      {"pairs.noise_sigma", nonneg(c.pair.noise_sigma)},
      {"preprocess.voxel", num(c.voxel, true)},
      {"features.normal_radius", num(c.normal_radius, true)},
      {"features.radius", num(c.feature_radius, true)},
      {"features.mutual", [&](const std::string& v) { c.mutual_matching = to_bool(key, v); }},
      {"ransac.iterations", integer(c.ransac.iterations)},
      {"ransac.sample_size", integer(c.ransac.sample_size)},
      {"ransac.inlier_threshold", num(c.ransac.inlier_threshold, true)},
      {"gicp.max_correspondence_distance", num(c.gicp.max_correspondence_distance, true)},
      {"gicp.max_iterations", integer(c.gicp.max_iterations)},
      {"gicp.transformation_epsilon", num(c.gicp.transformation_epsilon, true)},
      {"gicp.covariance_neighbors", integer(c.gicp.covariance_neighbors)},
      {"gicp.covariance_epsilon", num(c.gicp.covariance_epsilon, true)},
      {"gicp.min_correspondences", count(c.gicp.min_correspondences)},
      {"gicp.max_step_halvings", [&](const std::string& v) { c.gicp.max_step_halvings = to_int(key, v); }},
      {"metrics.grid_cell", num(c.grid_cell, true)},
      {"external.features_dir", [&](const std::string& v) { c.external_features = v; }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw Error("config error: unknown key '" + key + "'");
  it->second(value);
}

BenchConfig parse_config(const std::string& text, const std::string& source, BenchConfig base) {
  std::istringstream in(text);
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    const std::string where = source + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw Error("config error: " + where + ": expected key = value");
    try {
      apply_config_entry(base, trim(std::string_view(content).substr(0, eq)),
                         trim(std::string_view(content).substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(where + ": " + e.what());
    }
  }
  return base;
}

BenchConfig load_config(const std::filesystem::path& path, BenchConfig base) {
  return parse_config(read_text_file(path), path.string(), std::move(base));
}

BenchConfig parse_config(const std::string& text, const std::string& source) {
  return parse_config(text, source, BenchConfig{});
}

BenchConfig load_config(const std::filesystem::path& path) { return load_config(path, BenchConfig{}); }

// ---------------------------------------------------------------------------
// Dataset generation

PingTensor generate_tensor(const BenchConfig& config) {
  TerrainConfig terrain = config.terrain;
  terrain.seed = config.seed;
  return generate_terrain_pings(terrain, config.survey);
}

std::vector<DatasetManifest> generate_manifests(const PingTensor& tensor, const BenchConfig& config,
                                                const std::string& source) {
  const auto submaps = build_submaps(tensor, config.window, config.step);
  const auto bounds = boundaries_from_fractions(tensor.n_pings(), config.split_names, config.split_fractions);
  auto manifests = split_dataset(submaps, bounds, config.window, config.step);
  for (auto& m : manifests) {
    m.source = source;
    m.seed = config.seed;
  }
  return manifests;
}

std::uint64_t pair_base_seed(const BenchConfig& config) { return hash_seed(config.seed, "pairs"); }

std::vector<PairEntry> generate_pairs(const DatasetManifest& manifest, const BenchConfig& config) {
  std::vector<PairEntry> out;
  for (const auto& spec : enumerate_pairs(manifest, config.overlaps, pair_base_seed(config))) {
    out.push_back({spec, pair_ground_truth(spec, config.pair.ranges)});
  }
  return out;
}

PairFactory::PairFactory(const PingTensor& tensor, const DatasetManifest& manifest, const BenchConfig& config)
    : pair_config_(config.pair) {
  for (const auto& entry : manifest.submaps) {
    if (entry.end > tensor.n_pings() || entry.start >= entry.end) {
      throw Error("size mismatch: submap " + std::to_string(entry.id) + " lies outside the survey tensor");
    }
    Submap s = make_submap(tensor, entry.id, entry.start, entry.end);
    if ((s.centroid_offset - entry.centroid_offset).norm() > 1e-6 * (1.0 + entry.centroid_offset.norm())) {
      throw Error("manifest does not match tensor: submap " + std::to_string(entry.id) + " centroid differs");
    }
    s.cloud = voxel_downsample(s.cloud, config.voxel);
    downsampled_.emplace(entry.id, std::move(s));
  }
}

const Submap& PairFactory::submap(int id) const {
  const auto it = downsampled_.find(id);
  if (it == downsampled_.end()) throw Error("unknown submap id " + std::to_string(id));
  return it->second;
}

PairRecord PairFactory::make(const PairSpec& spec) const {
  return make_pair(submap(spec.ref_id), submap(spec.src_id), spec, pair_config_);
}

// ---------------------------------------------------------------------------
// Methods and results

MethodSpec parse_method(const std::string& text) {
  if (text == "gicp") return {MethodKind::Gicp, {}, text};
  if (text == "fpfh-ransac") return {MethodKind::FpfhRansac, {}, text};
  constexpr std::string_view prefix = "external:";
  if (text.starts_with(prefix) && text.size() > prefix.size()) {
    return {MethodKind::External, std::filesystem::path(text.substr(prefix.size())), "external"};
  }
  throw Error("usage error: unknown method '" + text + "' (expected gicp, fpfh-ransac or external:<file>)");
}

nlohmann::json outcome_to_json(const RegistrationOutcome& o, const std::string& method) {
  nlohmann::json j;
  j["pair_id"] = o.pair_id;
  j["method"] = method;
  j["success"] = o.success;
  if (o.transform) {
    const Matrix3d& r = o.transform->rotation();
    const Point3d& t = o.transform->translation();
    j["R"] = {r(0, 0), r(0, 1), r(0, 2), r(1, 0), r(1, 1), r(1, 2), r(2, 0), r(2, 1), r(2, 2)};
    j["t"] = {t.x(), t.y(), t.z()};
  }
  j["iterations"] = o.iterations;
  j["inlier_count"] = o.inlier_count;
  if (!o.error.empty()) j["error"] = o.error;
  return j;
}

RegistrationOutcome outcome_from_json(const nlohmann::json& j) {
  try {
    RegistrationOutcome o;
    o.pair_id = j.at("pair_id").get<int>();
    o.success = j.at("success").get<bool>();
    if (j.contains("R") || j.contains("t")) {
      const auto& r = j.at("R");
      const auto& t = j.at("t");
      if (r.size() != 9 || t.size() != 3) throw Error("R must have 9 values and t 3");
      Matrix3d rot;
      for (int k = 0; k < 9; ++k) rot(k / 3, k % 3) = r.at(static_cast<std::size_t>(k)).get<double>();
      o.transform = RigidTransformd::FromUserInput(
          rot, Point3d(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>()));
    }
    if (o.success && !o.transform) throw Error("successful result without R and t");
    if (j.contains("iterations")) o.iterations = j.at("iterations").get<int>();
    if (j.contains("inlier_count")) o.inlier_count = j.at("inlier_count").get<std::size_t>();
    if (j.contains("error")) o.error = j.at("error").get<std::string>();
    return o;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("results parse error: ") + e.what());
  }
}

std::map<int, RegistrationOutcome> read_outcomes(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::map<int, RegistrationOutcome> out;
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    if (trim(line).empty()) continue;
    try {
      auto o = outcome_from_json(nlohmann::json::parse(line));
      const int id = o.pair_id;
      if (!out.emplace(id, std::move(o)).second) throw Error("duplicate pair_id " + std::to_string(id));
    } catch (const std::exception& e) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

namespace {

RegistrationOutcome register_gicp(const PairRecord& pair, const BenchConfig& config) {
  RegistrationOutcome o;
  o.pair_id = pair.spec.pair_id;
  const auto r = gicp(pair.src_cloud, pair.ref_cloud, RigidTransformd::Identity(), config.gicp);
  o.iterations = r.iterations;
  o.inlier_count = r.inlier_count;
  o.success = r.converged;
  if (r.converged) {
    o.transform = r.transform;
  } else {
    o.error = r.inlier_count < config.gicp.min_correspondences ? "too few correspondences" : "no convergence";
  }
  return o;
}

RegistrationOutcome register_fpfh(const PairRecord& pair, const BenchConfig& config, std::optional<double>& ir) {
  RegistrationOutcome o;
  o.pair_id = pair.spec.pair_id;
  const PointCloudd ref = estimate_normals(pair.ref_cloud, config.normal_radius);
  const PointCloudd src = estimate_normals(pair.src_cloud, config.normal_radius);
  const auto corr =
      match_features(compute_fpfh(src, config.feature_radius), compute_fpfh(ref, config.feature_radius),
                     config.mutual_matching);
  if (!corr.empty()) ir = inlier_ratio(src, ref, corr, pair.gt, kInlierThreshold);
  RansacParams params = config.ransac;
  params.seed = hash_seed(pair.spec.seed, "ransac");
  if (corr.size() < static_cast<std::size_t>(params.sample_size)) {
    o.error = "too few correspondences";
    return o;
  }
  const auto r = ransac_registration(src, ref, corr, params);
  o.iterations = r.iterations;
  o.inlier_count = r.inlier_count;
  o.success = r.converged;
  if (r.converged) {
    o.transform = r.transform;
  } else {
    o.error = "too few inliers";
  }
  return o;
}

std::optional<double> external_inlier_ratio(const PairRecord& pair, const BenchConfig& config) {
  if (config.external_features.empty()) return std::nullopt;
  const auto base = config.external_features / ("pair_" + std::to_string(pair.spec.pair_id));
  const FeatureSet ref = read_features(base.string() + "_ref.feat");
  const FeatureSet src = read_features(base.string() + "_src.feat");
  if (ref.size() != pair.ref_cloud.size() || src.size() != pair.src_cloud.size()) {
    throw Error("size mismatch: feature dump rows differ from pair cloud sizes");
  }
  const auto corr = match_features(src, ref, config.mutual_matching);
  return inlier_ratio(pair.src_cloud, pair.ref_cloud, corr, pair.gt, kInlierThreshold);
}

}  // namespace

PairResult run_pair(const PairRecord& pair, const MethodSpec& method, const BenchConfig& config,
                    const std::map<int, RegistrationOutcome>* external) {
  PairResult result;
  std::optional<double> ir;
  try {
    switch (method.kind) {
      case MethodKind::Gicp:
        result.outcome = register_gicp(pair, config);
        break;
      case MethodKind::FpfhRansac:
        result.outcome = register_fpfh(pair, config, ir);
        break;
      case MethodKind::External: {
        const RegistrationOutcome* found = nullptr;
        if (external) {
          if (const auto it = external->find(pair.spec.pair_id); it != external->end()) found = &it->second;
        }
        if (found) {
          result.outcome = *found;
          if (!result.outcome.success) result.outcome.transform.reset();
        } else {
          result.outcome.pair_id = pair.spec.pair_id;
          result.outcome.error = "no result for pair";
        }
        ir = external_inlier_ratio(pair, config);
        break;
      }
    }
  } catch (const Error& e) {
    // A method that cannot produce a transform is a failed registration, not a crash.
    result.outcome = {};
    result.outcome.pair_id = pair.spec.pair_id;
    result.outcome.error = e.what();
  }
  const std::optional<RigidTransformd> pred =
      result.outcome.success ? result.outcome.transform : std::optional<RigidTransformd>{};
  result.metrics = evaluate_pair(pair.spec.pair_id, pair.spec.effective_overlap, method.name, pair.ref_cloud,
                                 pair.src_cloud, pair.gt, pred, ir, config.grid_cell);
  return result;
}

std::vector<PairResult> run_benchmark(const PairFactory& factory, const std::vector<PairEntry>& pairs,
                                      const MethodSpec& method, const BenchConfig& config, int jobs) {
  std::map<int, RegistrationOutcome> external;
  if (method.kind == MethodKind::External) external = read_outcomes(method.external_file);

  std::vector<PairResult> results(pairs.size());
  std::vector<std::string> errors(pairs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < pairs.size(); i = next++) {
      try {
        const PairRecord record = factory.make(pairs[i].spec);
        if ((record.gt.matrix() - pairs[i].gt.matrix()).cwiseAbs().maxCoeff() > 1e-9) {
          throw Error("pair manifest does not match configuration: ground truth differs (check pairs.* keys)");
        }
        results[i] = run_pair(record, method, config, &external);
      } catch (const std::exception& e) {
        errors[i] = "pair " + std::to_string(pairs[i].spec.pair_id) + ": " + e.what();
      }
    }
  };
  const int workers = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(pairs.size(), 1)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw Error(e);
  }
  return results;
}

void write_results(const std::vector<PairResult>& results, const std::string& method,
                   const std::filesystem::path& results_path, const std::filesystem::path& metrics_path) {
  std::string jsonl;
  std::string csv = metrics_csv_header() + "\n";
  for (const auto& r : results) {
    jsonl += outcome_to_json(r.outcome, method).dump() + "\n";
    csv += metrics_csv_row(r.metrics) + "\n";
  }
  write_text_file(results_path, jsonl);
  write_text_file(metrics_path, csv);
}

// ---------------------------------------------------------------------------
// Report

namespace {

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::string fixed(const std::optional<double>& v, int width, int precision) {
  char buf[64];
  if (v) {
    std::snprintf(buf, sizeof buf, "%*.*f", width, precision, *v);
  } else {
    std::snprintf(buf, sizeof buf, "%*s", width, "-");
  }
  return buf;
}

}  // namespace

std::vector<ReportRow> aggregate_report(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw Error("empty input: no metrics rows");
  std::map<std::pair<std::string, int>, std::vector<const MetricsReport*>> groups;
  for (const auto& r : reports) groups[{r.method, -overlap_bin_percent(r.effective_overlap)}].push_back(&r);

  std::vector<ReportRow> rows;
  for (const auto& [key, members] : groups) {
    ReportRow row;
    row.method = key.first;
    row.overlap_bin = -key.second;
    row.pairs = members.size();
    std::vector<double> consistency, overlap, rre_v, rte_v, ratios;
    std::size_t successes = 0, recalled = 0;
    for (const auto* m : members) {
      if (m->success) {
        ++successes;
        if (m->consistency_m) consistency.push_back(*m->consistency_m);
        if (m->overlap_pct) overlap.push_back(*m->overlap_pct);
      }
      if (m->recalled) {
        ++recalled;
        if (m->rre_deg) rre_v.push_back(*m->rre_deg);
        if (m->rte_m) rte_v.push_back(*m->rte_m);
      }
      if (m->inlier_ratio) ratios.push_back(*m->inlier_ratio);
    }
    const auto n = static_cast<double>(members.size());
    row.success_rate = static_cast<double>(successes) / n;
    row.recall = static_cast<double>(recalled) / n;
    row.mean_consistency_m = mean_of(consistency);
    row.mean_overlap_pct = mean_of(overlap);
    row.mean_rre_deg = mean_of(rre_v);
    row.mean_rte_m = mean_of(rte_v);
    if (!ratios.empty()) row.fmr = feature_match_recall(ratios);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::string s =
      "method,overlap_bin_pct,pairs,success_rate,mean_consistency_m,mean_overlap_pct,recall,mean_rre_deg,"
      "mean_rte_m,fmr\n";
  for (const auto& r : rows) {
    s += r.method + ',' + std::to_string(r.overlap_bin) + ',' + std::to_string(r.pairs) + ',' +
         format_double(r.success_rate) + ',' + cell(r.mean_consistency_m) + ',' + cell(r.mean_overlap_pct) + ',' +
         format_double(r.recall) + ',' + cell(r.mean_rre_deg) + ',' + cell(r.mean_rte_m) + ',' + cell(r.fmr) + '\n';
  }
  return s;
}

std::string report_text(const std::vector<ReportRow>& rows) {
  std::string s =
      "method        overlap  pairs  success  consist_m  overlap%  recall  rre_deg  rte_m     fmr\n";
  for (const auto& r : rows) {
    char head[64];
    std::snprintf(head, sizeof head, "%-12s %7d%% %6zu", r.method.c_str(), r.overlap_bin, r.pairs);
    s += head;
    s += fixed(100.0 * r.success_rate, 8, 1) + '%';
    s += fixed(r.mean_consistency_m, 10, 3) + ' ';
    s += fixed(r.mean_overlap_pct, 9, 1);
    s += fixed(100.0 * r.recall, 7, 1) + '%';
    s += fixed(r.mean_rre_deg, 8, 3);
    s += fixed(r.mean_rte_m, 7, 3);
    s += fixed(r.fmr ? std::optional<double>(100.0 * *r.fmr) : std::nullopt, 7, 1) + (r.fmr ? "%" : " ");
    s += '\n';
  }
  return s;
}

// ---------------------------------------------------------------------------
// Files

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("I/O error: cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.empty()) throw Error("I/O error: empty path");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("I/O error: cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("I/O error: write failed for " + path.string());
}

}  // namespace bathyreg
