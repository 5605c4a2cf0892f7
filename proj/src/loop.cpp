#include "alref/loop.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <tuple>

#include "alref/error.hpp"
#include "alref/rng.hpp"

namespace alref {

namespace {

constexpr std::uint64_t kTagCoarse = 1;
constexpr std::uint64_t kTagTrain = 2;
constexpr std::uint64_t kTagCandidates = 3;
constexpr std::uint64_t kTagRandomScores = 4;
constexpr std::uint64_t kTagOracle = 5;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n_candidates < 1) throw ConfigError("--candidates (N) must be >= 1");
  if (k_select < 1 || k_select > n_candidates) {
    throw ConfigError("--select (K) must be in [1, N]; got K=" + std::to_string(k_select) +
                      ", N=" + std::to_string(n_candidates));
  }
  if (cycles < 1) throw ConfigError("--cycles must be >= 1");
  if (repeats < 1) throw ConfigError("--repeats must be >= 1");
  if (candidate_size < 1) throw ConfigError("--candidate-size must be >= 1");
  if (jobs < 1) throw ConfigError("--jobs must be >= 1");
  if (max_acquisition_rate && !(*max_acquisition_rate > 0.0 && *max_acquisition_rate <= 1.0)) {
    throw ConfigError("--budget must be in (0, 1]");
  }
  if (coarse.min_filter < 1) throw ConfigError("--min-filter must be >= 1");
  if (coarse.max_filter < coarse.min_filter) throw ConfigError("--max-filter must be >= --min-filter");
  if (coarse.rounds < 1) throw ConfigError("--rounds must be >= 1");
  if (!(oracle.keep_coarse_probability >= 0.0 && oracle.keep_coarse_probability <= 1.0)) {
    throw ConfigError("--noisy-oracle must be in [0, 1]");
  }
  predictor.validate();
}

ExperimentConfig ExperimentConfig::full() { return ExperimentConfig{}; }

ExperimentConfig ExperimentConfig::desk() {
  ExperimentConfig c;
  c.n_candidates = 32;
  c.k_select = 4;
  c.cycles = 15;
  c.repeats = 5;
  c.candidate_size = 64;
  c.predictor.chip_size = 64;
  return c;
}

void Pool::validate() const {
  if (images.size() < 2) {
    throw ConfigError("pool needs >= 2 images for leave-one-out, got " +
                      std::to_string(images.size()));
  }
  if (fine.size() != images.size()) throw DimensionError("pool: image and label counts differ");
  for (std::size_t m = 0; m < images.size(); ++m) {
    if (images[m].bands() != images.front().bands()) {
      throw DimensionError("pool: images differ in band count");
    }
    if (images[m].width() != fine[m].width() || images[m].height() != fine[m].height()) {
      throw DimensionError("pool: labels not aligned with image " + std::to_string(m));
    }
    if (fine[m].num_classes() != fine.front().num_classes()) {
      throw DimensionError("pool: label rasters disagree on num_classes");
    }
  }
}

bool CycleRecord::same_outcome(const CycleRecord& o) const {
  return repeat == o.repeat && fold == o.fold && cycle == o.cycle && strategy == o.strategy &&
         accuracy == o.accuracy && acquisition_rate == o.acquisition_rate &&
         newly_refined == o.newly_refined;
}

PredictorFactory baseline_predictor_factory() {
  return [] { return std::make_unique<BaselinePredictor>(); };
}

double pixel_accuracy(const LabelRaster& predicted, const LabelRaster& truth) {
  if (predicted.width() != truth.width() || predicted.height() != truth.height()) {
    throw DimensionError("pixel_accuracy: rasters differ in size");
  }
  const auto a = predicted.data();
  const auto b = truth.data();
  std::size_t same = 0;
  for (std::size_t k = 0; k < a.size(); ++k) same += a[k] == b[k];
  return static_cast<double>(same) / static_cast<double>(a.size());
}

double acquisition_rate(const RefinementLedger& ledger, std::size_t total_training_pixels) {
  if (total_training_pixels == 0) throw ConfigError("acquisition_rate: no training pixels");
  return static_cast<double>(ledger.refined()) / static_cast<double>(total_training_pixels);
}

FoldOutcome run_fold_detailed(const ExperimentConfig& cfg, const Pool& pool, int repeat, int fold,
                              const PredictorFactory& factory) {
  cfg.validate();
  pool.validate();
  if (fold < 0 || static_cast<std::size_t>(fold) >= pool.size()) {
    throw ConfigError("fold " + std::to_string(fold) + " outside pool of " +
                      std::to_string(pool.size()));
  }
  for (const auto& img : pool.images) {
    if (cfg.predictor.chip_size > std::min(img.width(), img.height())) {
      throw ConfigError("--chip-size exceeds the smallest image dimension");
    }
    if (cfg.candidate_size > std::min(img.width(), img.height())) {
      throw ConfigError("--candidate-size exceeds the smallest image dimension");
    }
  }

  const auto s = cfg.master_seed;
  const auto r = static_cast<std::uint64_t>(repeat);
  const auto f = static_cast<std::uint64_t>(fold);

  std::vector<MultiBandRaster> images;
  std::vector<LabelRaster> fine;
  FoldOutcome out;
  for (std::size_t g = 0; g < pool.size(); ++g) {
    if (g == static_cast<std::size_t>(fold)) continue;
    images.push_back(pool.images[g]);
    fine.push_back(pool.fine[g]);
    CoarseSimConfig cc = cfg.coarse;
    cc.seed = derive_seed(s, {r, kTagCoarse, g});
    out.coarse_labels.push_back(simulate_coarse(pool.fine[g], cc).labels);
  }
  std::vector<LabelRaster> current = out.coarse_labels;
  out.ledger = RefinementLedger(current);
  const std::size_t total = out.ledger.total_pixels();
  const auto& held_image = pool.images[static_cast<std::size_t>(fold)];
  const auto& held_truth = pool.fine[static_cast<std::size_t>(fold)];

  OracleConfig oc = cfg.oracle;
  oc.seed = derive_seed(s, {r, f, kTagOracle});
  Oracle oracle(oc);
  auto predictor = factory();

  auto fit = [&](int cycle) {
    PredictorConfig pc = cfg.predictor;
    pc.seed = derive_seed(s, {r, f, static_cast<std::uint64_t>(cycle), kTagTrain});
    predictor->fit(images, current, pc);
  };
  auto evaluate = [&] {
    return pixel_accuracy(predictor->predict_proba(held_image).argmax(), held_truth);
  };

  int cycle = 0;
  try {
    auto t0 = Clock::now();
    fit(0);
    out.records.push_back({repeat, fold, 0, cfg.strategy, evaluate(), 0.0, 0, seconds_since(t0)});

    for (cycle = 1; cycle <= cfg.cycles; ++cycle) {
      t0 = Clock::now();
      const auto c = static_cast<std::uint64_t>(cycle);
      std::vector<EntropyMap> entropies;
      if (cfg.strategy == StrategyKind::kUS) {
        for (const auto& img : images) entropies.push_back(entropy_map(predictor->predict_proba(img)));
      }
      Rng cand_rng(derive_seed(s, {r, f, c, kTagCandidates}));
      auto candidates =
          sample_candidates(out.ledger.masks(), cfg.n_candidates, cfg.candidate_size, cand_rng);
      Rng score_rng(derive_seed(s, {r, f, c, kTagRandomScores}));
      score_candidates(cfg.strategy, candidates, out.ledger.masks(), entropies, score_rng);

      std::vector<double> utilities;
      utilities.reserve(candidates.size());
      for (const auto& cand : candidates) utilities.push_back(cand.utility);
      std::size_t newly = 0;
      for (auto idx : select_top_k(utilities, cfg.k_select)) {
        const auto& region = candidates[idx].region;
        newly += oracle.refine(current[region.image_index], fine[region.image_index], out.ledger,
                               region, cycle);
      }

      fit(cycle);
      const double rate = acquisition_rate(out.ledger, total);
      out.records.push_back(
          {repeat, fold, cycle, cfg.strategy, evaluate(), rate, newly, seconds_since(t0)});
      if (cfg.max_acquisition_rate && rate >= *cfg.max_acquisition_rate) break;
    }
  } catch (const Error& e) {
    throw Error("repeat " + std::to_string(repeat) + ", fold " + std::to_string(fold) +
                ", cycle " + std::to_string(cycle) + ": " + e.what());
  }
  out.final_labels = std::move(current);
  return out;
}

std::vector<CycleRecord> run_fold(const ExperimentConfig& cfg, const Pool& pool, int repeat,
                                  int fold, const PredictorFactory& factory) {
  return run_fold_detailed(cfg, pool, repeat, fold, factory).records;
}

std::vector<CycleRecord> run_experiment(const ExperimentConfig& cfg, const Pool& pool,
                                        const PredictorFactory& factory) {
  cfg.validate();
  pool.validate();
  const int folds = static_cast<int>(pool.size());
  const int jobs_total = cfg.repeats * folds;
  std::vector<std::vector<CycleRecord>> results(static_cast<std::size_t>(jobs_total));

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int job = next++; job < jobs_total; job = next++) {
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      try {
        results[static_cast<std::size_t>(job)] = run_fold(cfg, pool, job / folds, job % folds, factory);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const int threads = std::min(cfg.jobs, jobs_total);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool_threads;
    for (int t = 0; t < threads; ++t) pool_threads.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<CycleRecord> all;
  for (auto& r : results) all.insert(all.end(), r.begin(), r.end());
  std::stable_sort(all.begin(), all.end(), [](const CycleRecord& a, const CycleRecord& b) {
    return std::tie(a.repeat, a.fold, a.cycle) < std::tie(b.repeat, b.fold, b.cycle);
  });
  return all;
}

}  // namespace alref
