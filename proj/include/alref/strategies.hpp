#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alref/predictor.hpp"
#include "alref/raster.hpp"
#include "alref/rng.hpp"

namespace alref {

/// Random, Coverage and Uncertainty Sampling.
enum class StrategyKind { kRS, kCS, kUS };

inline constexpr StrategyKind kAllStrategies[] = {StrategyKind::kRS, StrategyKind::kCS,
                                                  StrategyKind::kUS};

/// "rs" | "cs" | "us"
std::string_view to_string(StrategyKind s);
/// Case-insensitive; nullopt for anything else.
std::optional<StrategyKind> parse_strategy(std::string_view text);

struct Candidate {
  Region region;
  double utility = 0.0;
};

/// n regions of size x size: uniform image index, then uniform top-left offset.
/// Duplicates and overlaps are allowed. Throws ConfigError if size exceeds any
/// image or n < 1.
std::vector<Candidate> sample_candidates(std::span<const AcquisitionMask> masks, int n, int size,
                                         Rng& rng);

/// Number of unrefined pixels in the crop.
double utility_cs(const AcquisitionMask& mask_crop);

/// Sum of entropies over unrefined pixels. Throws DimensionError on mismatch.
double utility_us(const AcquisitionMask& mask_crop, const EntropyMap& entropy_crop);

/// Uniform score in [0, 1); top-k over these is a uniform random k-subset.
double utility_rs(Rng& rng);

/// Fills candidate utilities for the given strategy. entropies is indexed like
/// masks and is only read for US.
void score_candidates(StrategyKind strategy, std::span<Candidate> candidates,
                      std::span<const AcquisitionMask> masks, std::span<const EntropyMap> entropies,
                      Rng& rng);

/// Indices of the k largest utilities (ties to the lower index), ascending.
/// This maximizes the summed utility over all k-subsets.
/// Throws ConfigError for k outside [1, N] and DomainError for non-finite values.
std::vector<std::size_t> select_top_k(std::span<const double> utilities, int k);

}  // namespace alref
