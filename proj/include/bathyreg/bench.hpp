#pragma once

#include <bathyreg/features.hpp>
#include <bathyreg/ingest.hpp>
#include <bathyreg/metrics.hpp>
#include <bathyreg/pairgen.hpp>
#include <bathyreg/preprocess.hpp>
#include <bathyreg/registration.hpp>
#include <bathyreg/terrain.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bathyreg {

/// Every tunable of the pipeline. Loaded from "key = value" text; see
/// apply_config_entry for the key names.
struct BenchConfig {
  std::uint64_t seed = 1;
  TerrainConfig terrain;
  SurveyGeometry survey;
  std::size_t window = 100;
  std::size_t step = 20;
  std::vector<std::string> split_names = {"train", "val", "test"};
  std::vector<double> split_fractions = {0.7714, 0.1281, 0.1005};
  std::vector<double> overlaps = {1.0, 0.8, 0.6, 0.4, 0.2};
  double voxel = kDefaultVoxelSize;
  PairConfig pair;
  double normal_radius = kDefaultNormalRadius;
  double feature_radius = kDefaultFeatureRadius;
  bool mutual_matching = false;
  RansacParams ransac;
  GicpParams gicp;
  double grid_cell = kDefaultGridCell;
  std::filesystem::path external_features;  // optional FEAT dumps for external methods
};

/// Sets one key; throws Error("config error: ...") for unknown keys or bad values.
void apply_config_entry(BenchConfig& config, const std::string& key, const std::string& value);

/// Parses "key = value" lines ('#' starts a comment) on top of `base`.
BenchConfig parse_config(const std::string& text, const std::string& source, BenchConfig base);
BenchConfig parse_config(const std::string& text, const std::string& source);
BenchConfig load_config(const std::filesystem::path& path, BenchConfig base);
BenchConfig load_config(const std::filesystem::path& path);

std::vector<double> parse_double_list(const std::string& text);

PingTensor generate_tensor(const BenchConfig& config);
std::vector<DatasetManifest> generate_manifests(const PingTensor& tensor, const BenchConfig& config,
                                                const std::string& source);

/// Seed the pair enumeration derives from; pair seeds hash it with (i, k).
std::uint64_t pair_base_seed(const BenchConfig& config);

std::vector<PairEntry> generate_pairs(const DatasetManifest& manifest, const BenchConfig& config);

/// Rebuilds pair clouds from the survey tensor and the submap manifest.
class PairFactory {
 public:
  PairFactory(const PingTensor& tensor, const DatasetManifest& manifest, const BenchConfig& config);

  PairRecord make(const PairSpec& spec) const;
  const Submap& submap(int id) const;

 private:
  PairConfig pair_config_;
  std::map<int, Submap> downsampled_;
};

enum class MethodKind { Gicp, FpfhRansac, External };

struct MethodSpec {
  MethodKind kind = MethodKind::Gicp;
  std::filesystem::path external_file;
  std::string name;  // as written in outputs
};

/// "gicp", "fpfh-ransac" or "external:<file>"; throws Error("usage error: ...").
MethodSpec parse_method(const std::string& text);

/// One line of a results file, also the external-method input format.
struct RegistrationOutcome {
  int pair_id = 0;
  bool success = false;
  std::optional<RigidTransformd> transform;
  int iterations = 0;
  std::size_t inlier_count = 0;
  std::string error;
};

nlohmann::json outcome_to_json(const RegistrationOutcome& outcome, const std::string& method);
RegistrationOutcome outcome_from_json(const nlohmann::json& json);
std::map<int, RegistrationOutcome> read_outcomes(const std::filesystem::path& path);

struct PairResult {
  RegistrationOutcome outcome;
  MetricsReport metrics;
};

/// Registers and scores each pair; `jobs` workers share the list and
/// results come back in input order whatever the worker count.
std::vector<PairResult> run_benchmark(const PairFactory& factory, const std::vector<PairEntry>& pairs,
                                      const MethodSpec& method, const BenchConfig& config, int jobs);

/// Registration plus scoring for a single materialised pair.
PairResult run_pair(const PairRecord& pair, const MethodSpec& method, const BenchConfig& config,
                    const std::map<int, RegistrationOutcome>* external);

void write_results(const std::vector<PairResult>& results, const std::string& method,
                   const std::filesystem::path& results_path, const std::filesystem::path& metrics_path);

/// Aggregate over one (method, overlap bin) group.
struct ReportRow {
  std::string method;
  int overlap_bin = 0;  // percent
  std::size_t pairs = 0;
  double success_rate = 0.0;
  std::optional<double> mean_consistency_m;  // successes only
  std::optional<double> mean_overlap_pct;    // successes only
  double recall = 0.0;
  std::optional<double> mean_rre_deg;  // recalled only
  std::optional<double> mean_rte_m;    // recalled only
  std::optional<double> fmr;           // pairs with an inlier ratio only
};

/// Rows ordered by method name, then decreasing overlap bin. Throws on empty input.
std::vector<ReportRow> aggregate_report(const std::vector<MetricsReport>& reports);
std::string report_csv(const std::vector<ReportRow>& rows);
std::string report_text(const std::vector<ReportRow>& rows);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace bathyreg
