// bathyreg: dataset generation, registration benchmark runs and reports.

#include <bathyreg/bench.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace bathyreg;

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string overlaps;
  std::string out = ".";

  BenchConfig resolve() const {
    BenchConfig config;
    if (!config_path.empty()) config = load_config(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error("usage error: --set expects key=value, got '" + kv + "'");
      apply_config_entry(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) config.seed = *seed;
    if (!overlaps.empty()) config.overlaps = parse_double_list(overlaps);
    return config;
  }

  fs::path out_dir() const {
    fs::create_directories(out);
    return out;
  }
};

/// MBPT unless the file ends in .csv.
PingTensor load_tensor(const fs::path& path) {
  return path.extension() == ".csv" ? read_ping_csv(path) : read_ping_tensor(path);
}

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "key = value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--set", opts.overrides, "override one configuration key (key=value)");
  cmd->add_option("--seed", opts.seed, "global seed");
  cmd->add_option("--out", opts.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bathymetric submap registration benchmark"};
  app.require_subcommand(1);

  CommonOptions terrain_opts, submap_opts, pair_opts, run_opts, report_opts;
  std::string tensor_path, manifest_path, pairs_path, method = "gicp", clouds_dir;
  std::vector<std::string> metrics_files;
  int jobs = 1;

  auto* gen_terrain = app.add_subcommand("gen-terrain", "write a synthetic survey tensor (terrain.mbpt)");
  add_common(gen_terrain, terrain_opts);

  auto* gen_submaps = app.add_subcommand("gen-submaps", "cut a survey into submaps, one manifest per split");
  add_common(gen_submaps, submap_opts);
  gen_submaps->add_option("--tensor", tensor_path, "survey tensor (MBPT, or CSV by extension)")->required()->check(CLI::ExistingFile);

  auto* gen_pairs = app.add_subcommand("gen-pairs", "enumerate registration pairs (pairs.jsonl)");
  add_common(gen_pairs, pair_opts);
  gen_pairs->add_option("--manifest", manifest_path, "submap manifest")->required()->check(CLI::ExistingFile);
  gen_pairs->add_option("--overlaps", pair_opts.overlaps, "nominal overlaps, e.g. 1.0,0.8,0.6");
  gen_pairs->add_option("--tensor", tensor_path, "survey tensor; needed with --clouds-dir")->check(CLI::ExistingFile);
  gen_pairs->add_option("--clouds-dir", clouds_dir, "also write pair_<id>_{ref,src}.mbpt clouds here");

  auto* run = app.add_subcommand("run", "register every pair (results.jsonl, metrics.csv)");
  add_common(run, run_opts);
  run->add_option("--tensor", tensor_path, "survey tensor (MBPT, or CSV by extension)")->required()->check(CLI::ExistingFile);
  run->add_option("--manifest", manifest_path, "submap manifest")->required()->check(CLI::ExistingFile);
  run->add_option("--pairs", pairs_path, "pair manifest")->required()->check(CLI::ExistingFile);
  run->add_option("--method", method, "gicp | fpfh-ransac | external:<results.jsonl>");
  run->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  auto* report = app.add_subcommand("report", "aggregate metrics per method and overlap (report.csv, report.txt)");
  add_common(report, report_opts);
  report->add_option("metrics", metrics_files, "per-pair metrics CSV files")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_terrain) {
      const BenchConfig config = terrain_opts.resolve();
      const auto path = terrain_opts.out_dir() / "terrain.mbpt";
      const PingTensor tensor = generate_tensor(config);
      write_ping_tensor(tensor, path);
      std::cout << path.string() << ": " << tensor.n_pings() << " pings x " << tensor.n_beams() << " beams\n";
    } else if (*gen_submaps) {
      const BenchConfig config = submap_opts.resolve();
      const PingTensor tensor = load_tensor(tensor_path);
      const auto dir = submap_opts.out_dir();
      std::size_t total = 0;
      for (const auto& m : generate_manifests(tensor, config, fs::path(tensor_path).filename().string())) {
        const auto path = dir / ("manifest_" + m.split + ".json");
        write_manifest(m, path);
        total += m.submaps.size();
        std::cout << path.string() << ": " << m.submaps.size() << " submaps\n";
      }
      std::cout << "submaps: " << build_submaps(tensor, config.window, config.step).size() << " built, " << total
                << " assigned to splits\n";
    } else if (*gen_pairs) {
      const BenchConfig config = pair_opts.resolve();
      const DatasetManifest manifest = read_manifest(manifest_path);
      const auto pairs = generate_pairs(manifest, config);
      const auto path = pair_opts.out_dir() / "pairs.jsonl";
      write_pair_manifest(pairs, path);
      if (!clouds_dir.empty()) {
        if (tensor_path.empty()) throw Error("usage error: --clouds-dir requires --tensor");
        fs::create_directories(clouds_dir);
        const PingTensor tensor = load_tensor(tensor_path);
        const PairFactory factory(tensor, manifest, config);
        for (const auto& p : pairs) {
          const PairRecord record = factory.make(p.spec);
          const auto base = fs::path(clouds_dir) / ("pair_" + std::to_string(p.spec.pair_id));
          write_cloud(record.ref_cloud, base.string() + "_ref.mbpt");
          write_cloud(record.src_cloud, base.string() + "_src.mbpt");
        }
      }
      std::cout << path.string() << ": " << pairs.size() << " pairs\n";
    } else if (*run) {
      const BenchConfig config = run_opts.resolve();
      const MethodSpec spec = parse_method(method);
      const PingTensor tensor = load_tensor(tensor_path);
      const DatasetManifest manifest = read_manifest(manifest_path);
      const auto pairs = read_pair_manifest(pairs_path);
      const PairFactory factory(tensor, manifest, config);
      const auto results = run_benchmark(factory, pairs, spec, config, jobs);
      const auto dir = run_opts.out_dir();
      write_results(results, spec.name, dir / "results.jsonl", dir / "metrics.csv");
      std::size_t ok = 0;
      for (const auto& r : results) ok += r.outcome.success;
      std::cout << spec.name << ": " << ok << "/" << results.size() << " pairs registered\n";
    } else if (*report) {
      std::vector<MetricsReport> rows;
      for (const auto& f : metrics_files) {
        auto part = parse_metrics_csv(read_text_file(f), f);
        rows.insert(rows.end(), part.begin(), part.end());
      }
      const auto table = aggregate_report(rows);
      const auto dir = report_opts.out_dir();
      write_text_file(dir / "report.csv", report_csv(table));
      const std::string text = report_text(table);
      write_text_file(dir / "report.txt", text);
      std::cout << text;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
