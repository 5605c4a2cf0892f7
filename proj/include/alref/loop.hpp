#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "alref/coarse.hpp"
#include "alref/oracle.hpp"
#include "alref/predictor.hpp"
#include "alref/raster.hpp"
#include "alref/strategies.hpp"

namespace alref {

struct ExperimentConfig {
  int n_candidates = 128;
  int k_select = 16;
  int cycles = 30;
  StrategyKind strategy = StrategyKind::kUS;
  int repeats = 20;
  int candidate_size = 128;
  PredictorConfig predictor;
  CoarseSimConfig coarse;  // its seed is replaced per (repeat, image)
  OracleConfig oracle;     // its seed is replaced per (repeat, fold)
  std::uint64_t master_seed = 0;
  /// Optional budget: stop a fold once this acquisition rate is reached.
  std::optional<double> max_acquisition_rate;
  int jobs = 1;

  /// Throws ConfigError naming the offending setting.
  void validate() const;

  /// Full-size protocol: N=128, K=16, 30 cycles, 20 repeats, 128 px areas.
  static ExperimentConfig full();
  /// Desk-scale protocol used by the CLI defaults and the acceptance suite:
  /// N=32, K=4, 15 cycles, 5 repeats, 64 px areas and chips.
  static ExperimentConfig desk();
};

/// Images with their fine (ground-truth) labels.
struct Pool {
  std::vector<MultiBandRaster> images;
  std::vector<LabelRaster> fine;

  std::size_t size() const { return images.size(); }
  /// Throws ConfigError/DimensionError unless >= 2 aligned image/label pairs.
  void validate() const;
};

struct CycleRecord {
  int repeat = 0;
  int fold = 0;
  int cycle = 0;
  StrategyKind strategy = StrategyKind::kRS;
  double accuracy = 0.0;
  double acquisition_rate = 0.0;
  std::size_t newly_refined = 0;
  double seconds = 0.0;

  /// Equality of everything except wall time.
  bool same_outcome(const CycleRecord& o) const;
};

using PredictorFactory = std::function<std::unique_ptr<Predictor>()>;

/// Factory for the in-process baseline predictor.
PredictorFactory baseline_predictor_factory();

double pixel_accuracy(const LabelRaster& predicted, const LabelRaster& truth);

/// Refined pixels / total training pixels. Throws ConfigError for total == 0.
double acquisition_rate(const RefinementLedger& ledger, std::size_t total_training_pixels);

/// Everything a fold produces; records is what run_fold returns.
struct FoldOutcome {
  std::vector<CycleRecord> records;
  std::vector<LabelRaster> final_labels;  // training images, in pool order minus the fold
  std::vector<LabelRaster> coarse_labels;
  RefinementLedger ledger;
};

/// Holds out image `fold`, simulates coarse labels on the rest, records cycle 0
/// (trained on coarse labels), then per cycle: scores N sampled candidates with
/// the model trained on the current labels, refines the top K, retrains and
/// evaluates on the held-out image. Deterministic in (master_seed, repeat, fold).
FoldOutcome run_fold_detailed(const ExperimentConfig& cfg, const Pool& pool, int repeat, int fold,
                              const PredictorFactory& factory = baseline_predictor_factory());

std::vector<CycleRecord> run_fold(const ExperimentConfig& cfg, const Pool& pool, int repeat,
                                  int fold,
                                  const PredictorFactory& factory = baseline_predictor_factory());

/// repeats x folds, run on up to cfg.jobs threads; sorted by (repeat, fold, cycle).
std::vector<CycleRecord> run_experiment(const ExperimentConfig& cfg, const Pool& pool,
                                        const PredictorFactory& factory =
                                            baseline_predictor_factory());

}  // namespace alref
