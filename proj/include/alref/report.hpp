#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alref/loop.hpp"
#include "alref/strategies.hpp"

namespace alref {

enum class Metric { kAccuracy, kAcquisitionRate };

/// Per-cycle mean and standard error of one metric for one strategy.
struct CurveSeries {
  StrategyKind strategy = StrategyKind::kRS;
  std::vector<int> cycles;  // 0, 1, ..., contiguous
  std::vector<double> mean;
  std::vector<double> std_error;  // sample std (n-1) / sqrt(n); 0 when n == 1
  double legend_mean = 0.0;       // mean of the per-cycle means
};

/// Groups by (strategy, cycle) over all (repeat, fold) pairs. Series come out in
/// RS, CS, US order. Throws FormatError naming the strategy when its (repeat,
/// fold) groups do not all cover the same contiguous cycle range, or on
/// duplicate records. Result does not depend on input order.
std::vector<CurveSeries> aggregate(std::span<const CycleRecord> records, Metric metric);

/// Line chart with a shaded +-stderr band per series, axis ticks and a legend
/// showing each legend mean to 4 decimals. Byte-deterministic.
std::string render_svg(std::span<const CurveSeries> series, std::string_view metric_label);

/// Formats a legend mean the way render_svg prints it.
std::string format_legend_mean(double v);

/// Result table with columns
/// repeat,fold,cycle,strategy,accuracy,acquisition_rate,newly_refined,seconds.
/// Doubles use the shortest round-trip representation. With include_timing
/// false the seconds column is written as 0.
std::string records_to_csv(std::span<const CycleRecord> records, bool include_timing = true);
std::vector<CycleRecord> records_from_csv(std::string_view text);

struct SummaryRow {
  StrategyKind strategy = StrategyKind::kRS;
  double legend_mean_accuracy = 0.0;
  double final_accuracy = 0.0;
  double final_acquisition_rate = 0.0;
};

/// One row per strategy present in the records.
std::vector<SummaryRow> summarize(std::span<const CycleRecord> records);
std::string summary_to_csv(std::span<const SummaryRow> rows);

}  // namespace alref
