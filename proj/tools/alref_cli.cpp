// alref: active label refinement experiments.
//
//   alref gen-data        --out DIR [--seed S] [--images N] ...
//   alref simulate-coarse --manifest data/manifest.json [--out DIR] ...
//   alref run             --manifest data/manifest.json --strategy us [--out results_us.csv] ...
//   alref report          results_*.csv --out report/
//
// Exit codes: 0 success, 1 usage/config, 2 IO/format, 3 internal.

#include <glob.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "alref/bras.hpp"
#include "alref/coarse.hpp"
#include "alref/config_json.hpp"
#include "alref/error.hpp"
#include "alref/loop.hpp"
#include "alref/protocol.hpp"
#include "alref/report.hpp"
#include "alref/rng.hpp"
#include "alref/synthdata.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kDefaultSeed = 42;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitInternal = 3;

std::string two_digits(std::size_t i) {
  std::ostringstream s;
  s << std::setw(2) << std::setfill('0') << i;
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  alref::write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                          text.size()));
}

std::string read_text(const fs::path& path) {
  const auto bytes = alref::read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw alref::FormatError(path.string() + ": " + e.what());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw alref::IoError("cannot create output directory: " + dir.string());
  }
}

std::string fnv_hex(const std::string& bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

struct DataManifest {
  fs::path dir;
  alref::SceneSpec spec;
  std::vector<std::pair<fs::path, fs::path>> pairs;
};

DataManifest load_data_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw alref::IoError("data manifest not found: " + path.string());
  const auto j = read_json(path);
  DataManifest m;
  m.dir = path.parent_path();
  try {
    alref::from_json(j.at("spec"), m.spec);
    for (const auto& p : j.at("pairs")) {
      m.pairs.emplace_back(m.dir / p.at("image").get<std::string>(),
                           m.dir / p.at("labels").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw alref::FormatError(path.string() + ": " + e.what());
  }
  return m;
}

alref::Pool load_pool(const DataManifest& m) {
  alref::Pool pool;
  for (const auto& [img, lab] : m.pairs) {
    pool.images.push_back(alref::read_bras_image(img));
    pool.fine.push_back(alref::read_bras_labels(lab, m.spec.num_classes));
  }
  return pool;
}

// ---------------------------------------------------------------- gen-data

struct GenDataArgs {
  fs::path out;
  std::uint64_t seed = kDefaultSeed;
  int images = 6;
  alref::SceneSpec spec;
};

void cmd_gen_data(const GenDataArgs& a) {
  if (a.images < 2) {
    throw alref::ConfigError("--images must be >= 2 so leave-one-out has a training set");
  }
  ensure_dir(a.out);
  const auto pool = alref::generate_pool(a.seed, a.images, a.spec);
  json manifest{{"format", "alref-data"}, {"version", 1}, {"seed", a.seed}, {"n_images", a.images}};
  alref::SceneSpec spec = a.spec;
  spec.seed = a.seed;
  manifest["spec"] = spec;
  auto& pairs = manifest["pairs"] = json::array();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto img = "image_" + two_digits(i) + ".bras";
    const auto lab = "labels_" + two_digits(i) + ".bras";
    alref::write_bras(a.out / img, pool[i].image);
    alref::write_bras(a.out / lab, pool[i].labels);
    pairs.push_back({{"image", img}, {"labels", lab}});
  }
  write_text(a.out / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "wrote " << pool.size() << " image/label pairs to " << a.out.string() << "\n";
}

// --------------------------------------------------------- simulate-coarse

struct CoarseArgs {
  fs::path manifest;
  fs::path out;
  std::uint64_t seed = kDefaultSeed;
  alref::CoarseSimConfig cfg;
};

void cmd_simulate_coarse(const CoarseArgs& a) {
  const auto m = load_data_manifest(a.manifest);
  const fs::path out = a.out.empty() ? m.dir : a.out;
  ensure_dir(out);
  json log{{"seed", a.seed}, {"config", a.cfg}, {"images", json::array()}};
  for (std::size_t g = 0; g < m.pairs.size(); ++g) {
    const auto fine = alref::read_bras_labels(m.pairs[g].second, m.spec.num_classes);
    alref::CoarseSimConfig cfg = a.cfg;
    cfg.seed = alref::derive_seed(a.seed, {g});
    const auto result = alref::simulate_coarse(fine, cfg);
    const auto name = "coarse_" + two_digits(g) + ".bras";
    alref::write_bras(out / name, result.labels);
    json steps = json::array();
    for (const auto& s : result.steps) steps.push_back({{"class", s.cls}, {"fw", s.fw}, {"fh", s.fh}});
    const double rate = alref::noise_rate(result.labels, fine);
    log["images"].push_back({{"labels", m.pairs[g].second.filename().string()},
                             {"coarse", name},
                             {"steps", steps},
                             {"noise_rate", rate}});
    std::cout << name << " noise_rate " << rate << "\n";
  }
  write_text(out / "coarse_log.json", log.dump(2) + "\n");
}

// --------------------------------------------------------------------- run

struct RunArgs {
  fs::path manifest;
  fs::path from_manifest;
  fs::path out;
  std::string strategy;
  std::string predictor = "baseline";
  std::string sidecar_cmd;
  double sidecar_timeout = 600.0;
  bool no_timing = false;
  alref::ExperimentConfig cfg = alref::ExperimentConfig::desk();
};

void cmd_run(RunArgs a, const CLI::App& sub) {
  auto given = [&](const char* name) { return sub.get_option(name)->count() > 0; };

  // Precedence: flags > run manifest > defaults.
  alref::ExperimentConfig cfg = alref::ExperimentConfig::desk();
  cfg.master_seed = kDefaultSeed;
  fs::path data_manifest;
  fs::path out = "results.csv";
  std::string predictor = "baseline";
  std::string sidecar_cmd;
  double sidecar_timeout = 600.0;
  bool timing = true;
  if (!a.from_manifest.empty()) {
    if (!fs::exists(a.from_manifest)) {
      throw alref::IoError("run manifest not found: " + a.from_manifest.string());
    }
    const auto rm = read_json(a.from_manifest);
    try {
      alref::from_json(rm.at("config"), cfg);
      data_manifest = rm.at("data_manifest").get<std::string>();
      out = rm.value("output", out.string());
      predictor = rm.value("predictor", predictor);
      sidecar_cmd = rm.value("sidecar_cmd", sidecar_cmd);
      sidecar_timeout = rm.value("sidecar_timeout", sidecar_timeout);
      timing = rm.value("timing", timing);
    } catch (const json::exception& e) {
      throw alref::FormatError(a.from_manifest.string() + ": " + e.what());
    }
  }
  if (given("--manifest")) data_manifest = a.manifest;
  if (given("--out")) out = a.out;
  if (given("--strategy")) cfg.strategy = *alref::parse_strategy(a.strategy);
  if (given("--cycles")) cfg.cycles = a.cfg.cycles;
  if (given("--repeats")) cfg.repeats = a.cfg.repeats;
  if (given("--candidates")) cfg.n_candidates = a.cfg.n_candidates;
  if (given("--select")) cfg.k_select = a.cfg.k_select;
  if (given("--candidate-size")) cfg.candidate_size = a.cfg.candidate_size;
  if (given("--chip-size")) cfg.predictor.chip_size = a.cfg.predictor.chip_size;
  if (given("--chips-per-epoch")) cfg.predictor.chips_per_epoch = a.cfg.predictor.chips_per_epoch;
  if (given("--epochs")) cfg.predictor.epochs = a.cfg.predictor.epochs;
  if (given("--learning-rate")) cfg.predictor.learning_rate = a.cfg.predictor.learning_rate;
  if (given("--window")) cfg.predictor.window = a.cfg.predictor.window;
  if (given("--warm-start")) cfg.predictor.warm_start = true;
  if (given("--min-filter")) cfg.coarse.min_filter = a.cfg.coarse.min_filter;
  if (given("--max-filter")) cfg.coarse.max_filter = a.cfg.coarse.max_filter;
  if (given("--rounds")) cfg.coarse.rounds = a.cfg.coarse.rounds;
  if (given("--seed")) cfg.master_seed = a.cfg.master_seed;
  if (given("--budget")) cfg.max_acquisition_rate = a.cfg.max_acquisition_rate;
  if (given("--noisy-oracle")) {
    cfg.oracle.keep_coarse_probability = a.cfg.oracle.keep_coarse_probability;
  }
  if (given("--jobs")) {
    cfg.jobs = a.cfg.jobs;
  } else if (const char* env = std::getenv("ALREF_JOBS"); env && a.from_manifest.empty()) {
    try {
      cfg.jobs = std::stoi(env);
    } catch (const std::exception&) {
      throw alref::ConfigError("ALREF_JOBS must be an integer, got '" + std::string(env) + "'");
    }
  }
  if (given("--predictor")) predictor = a.predictor;
  if (given("--sidecar-cmd")) sidecar_cmd = a.sidecar_cmd;
  if (given("--sidecar-timeout")) sidecar_timeout = a.sidecar_timeout;
  if (given("--no-timing")) timing = false;

  if (data_manifest.empty()) throw alref::ConfigError("--manifest is required");
  if (predictor == "sidecar" && sidecar_cmd.empty()) {
    throw alref::ConfigError("--sidecar-cmd is required with --predictor sidecar");
  }
  cfg.validate();

  const auto dm = load_data_manifest(data_manifest);
  const auto pool = load_pool(dm);

  alref::PredictorFactory factory = alref::baseline_predictor_factory();
  if (predictor == "sidecar") {
    alref::SidecarOptions opts;
    opts.command = sidecar_cmd;
    opts.timeout = std::chrono::milliseconds(static_cast<long long>(sidecar_timeout * 1000));
    factory = alref::sidecar_predictor_factory(opts);
  }

  const auto records = alref::run_experiment(cfg, pool, factory);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  write_text(out, alref::records_to_csv(records, timing));

  json run_manifest{{"tool", "alref"},
                    {"version", ALREF_VERSION},
                    {"timestamp", utc_timestamp()},
                    {"data_manifest", fs::absolute(data_manifest).lexically_normal().string()},
                    {"data_manifest_hash", fnv_hex(read_text(data_manifest))},
                    {"output", out.string()},
                    {"predictor", predictor},
                    {"sidecar_cmd", sidecar_cmd},
                    {"sidecar_timeout", sidecar_timeout},
                    {"timing", timing},
                    {"config", cfg}};
  write_text(out.string() + ".manifest.json", run_manifest.dump(2) + "\n");
  std::cout << "wrote " << records.size() << " records to " << out.string() << "\n";
}

// ------------------------------------------------------------------ report

std::vector<fs::path> expand_inputs(const std::vector<std::string>& patterns) {
  std::vector<fs::path> files;
  for (const auto& pattern : patterns) {
    glob_t g{};
    if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) files.emplace_back(g.gl_pathv[i]);
    }
    ::globfree(&g);
  }
  return files;
}

void cmd_report(const std::vector<std::string>& inputs, const fs::path& out) {
  const auto files = expand_inputs(inputs);
  if (files.empty()) throw alref::IoError("no result CSV matches the given inputs");
  std::vector<alref::CycleRecord> records;
  for (const auto& f : files) {
    auto part = alref::records_from_csv(read_text(f));
    records.insert(records.end(), part.begin(), part.end());
  }
  ensure_dir(out);
  const auto acc = alref::aggregate(records, alref::Metric::kAccuracy);
  const auto acq = alref::aggregate(records, alref::Metric::kAcquisitionRate);
  write_text(out / "accuracy.svg", alref::render_svg(acc, "accuracy"));
  write_text(out / "acquisition.svg", alref::render_svg(acq, "acquisition rate"));
  const auto rows = alref::summarize(records);
  write_text(out / "summary.csv", alref::summary_to_csv(rows));
  std::cout << alref::summary_to_csv(rows);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active label refinement experiments for semantic segmentation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ALREF_VERSION);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic image/label pool");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "Pool seed")->capture_default_str();
  gen_cmd->add_option("--images", gen.images, "Number of images")->capture_default_str();
  gen_cmd->add_option("--width", gen.spec.width)->capture_default_str();
  gen_cmd->add_option("--height", gen.spec.height)->capture_default_str();
  gen_cmd->add_option("--bands", gen.spec.bands)->capture_default_str();
  gen_cmd->add_option("--classes", gen.spec.num_classes)->capture_default_str();
  gen_cmd->add_option("--blob-count", gen.spec.blob_count, "Seed sites per class")
      ->capture_default_str();
  gen_cmd->add_option("--noise-sigma", gen.spec.noise_sigma)->capture_default_str();
  gen_cmd->add_option("--small-object-rate", gen.spec.small_object_rate)->capture_default_str();

  CoarseArgs coarse;
  auto* coarse_cmd = app.add_subcommand("simulate-coarse", "Simulate coarse labels for a pool");
  coarse_cmd->add_option("--manifest", coarse.manifest, "Data manifest")->required();
  coarse_cmd->add_option("--out", coarse.out, "Output directory (default: manifest directory)");
  coarse_cmd->add_option("--seed", coarse.seed)->capture_default_str();
  coarse_cmd->add_option("--min-filter", coarse.cfg.min_filter)->capture_default_str();
  coarse_cmd->add_option("--max-filter", coarse.cfg.max_filter)->capture_default_str();
  coarse_cmd->add_option("--rounds", coarse.cfg.rounds)->capture_default_str();

  RunArgs run;
  std::optional<double> budget;
  double noisy_oracle = 0.0;
  auto* run_cmd = app.add_subcommand("run", "Run a repeated leave-one-out experiment");
  run_cmd->add_option("--manifest", run.manifest, "Data manifest");
  run_cmd->add_option("--from-manifest", run.from_manifest, "Re-run a previous run manifest");
  run_cmd->add_option("--out", run.out, "Result CSV (default results.csv)");
  run_cmd->add_option("--strategy", run.strategy, "rs | cs | us")
      ->transform(CLI::IsMember({"rs", "cs", "us"}, CLI::ignore_case));
  run_cmd->add_option("--cycles", run.cfg.cycles)->capture_default_str();
  run_cmd->add_option("--repeats", run.cfg.repeats)->capture_default_str();
  run_cmd->add_option("--candidates", run.cfg.n_candidates, "N")->capture_default_str();
  run_cmd->add_option("--select", run.cfg.k_select, "K")->capture_default_str();
  run_cmd->add_option("--candidate-size", run.cfg.candidate_size)->capture_default_str();
  run_cmd->add_option("--chip-size", run.cfg.predictor.chip_size)->capture_default_str();
  run_cmd->add_option("--chips-per-epoch", run.cfg.predictor.chips_per_epoch)->capture_default_str();
  run_cmd->add_option("--epochs", run.cfg.predictor.epochs)->capture_default_str();
  run_cmd->add_option("--learning-rate", run.cfg.predictor.learning_rate)->capture_default_str();
  run_cmd->add_option("--window", run.cfg.predictor.window)->capture_default_str();
  run_cmd->add_flag("--warm-start", "Continue training from the previous cycle's model");
  run_cmd->add_option("--min-filter", run.cfg.coarse.min_filter)->capture_default_str();
  run_cmd->add_option("--max-filter", run.cfg.coarse.max_filter)->capture_default_str();
  run_cmd->add_option("--rounds", run.cfg.coarse.rounds)->capture_default_str();
  run_cmd->add_option("--seed", run.cfg.master_seed, "Master seed (default 42)");
  run_cmd->add_option("--jobs", run.cfg.jobs, "Parallel folds (fallback: ALREF_JOBS)");
  run_cmd->add_option("--budget", budget, "Stop a fold at this acquisition rate");
  run_cmd->add_option("--noisy-oracle", noisy_oracle,
                      "Probability that the oracle keeps a coarse label");
  run_cmd->add_option("--predictor", run.predictor, "baseline | sidecar")
      ->check(CLI::IsMember({"baseline", "sidecar"}));
  run_cmd->add_option("--sidecar-cmd", run.sidecar_cmd, "Command launching a protocol v1 server");
  run_cmd->add_option("--sidecar-timeout", run.sidecar_timeout, "Seconds per request");
  run_cmd->add_flag("--no-timing", run.no_timing, "Write 0 in the seconds column");

  std::vector<std::string> report_inputs;
  fs::path report_out = "report";
  auto* report_cmd = app.add_subcommand("report", "Aggregate result CSVs into plots and a summary");
  report_cmd->add_option("inputs", report_inputs, "Result CSV files or glob patterns")->required();
  report_cmd->add_option("--out", report_out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen_cmd) {
      cmd_gen_data(gen);
    } else if (*coarse_cmd) {
      cmd_simulate_coarse(coarse);
    } else if (*run_cmd) {
      run.cfg.max_acquisition_rate = budget;
      run.cfg.oracle.keep_coarse_probability = noisy_oracle;
      cmd_run(run, *run_cmd);
    } else if (*report_cmd) {
      cmd_report(report_inputs, report_out);
    }
  } catch (const alref::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const alref::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const alref::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return 0;
}
