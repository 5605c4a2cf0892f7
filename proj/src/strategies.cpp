#include "alref/strategies.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "alref/error.hpp"

namespace alref {

std::string_view to_string(StrategyKind s) {
  switch (s) {
    case StrategyKind::kRS: return "rs";
    case StrategyKind::kCS: return "cs";
    case StrategyKind::kUS: return "us";
  }
  return "?";
}

std::optional<StrategyKind> parse_strategy(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (auto s : kAllStrategies) {
    if (lower == to_string(s)) return s;
  }
  return std::nullopt;
}

std::vector<Candidate> sample_candidates(std::span<const AcquisitionMask> masks, int n, int size,
                                         Rng& rng) {
  if (n < 1) throw ConfigError("number of candidates must be >= 1");
  if (masks.empty()) throw ConfigError("candidate sampling needs at least one training image");
  for (const auto& m : masks) {
    if (size < 1 || size > m.width() || size > m.height()) {
      throw ConfigError("candidate size " + std::to_string(size) + " does not fit a " +
                        std::to_string(m.width()) + "x" + std::to_string(m.height()) + " image");
    }
  }
  std::vector<Candidate> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) {
    const auto img = static_cast<std::size_t>(rng.below(masks.size()));
    const auto& m = masks[img];
    const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(m.width() - size + 1)));
    const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(m.height() - size + 1)));
    out.push_back({Region{img, x0, y0, size, size}, 0.0});
  }
  return out;
}

double utility_cs(const AcquisitionMask& mask_crop) {
  return static_cast<double>(mask_crop.count_ones());
}

double utility_us(const AcquisitionMask& mask_crop, const EntropyMap& entropy_crop) {
  if (mask_crop.width() != entropy_crop.width || mask_crop.height() != entropy_crop.height) {
    throw DimensionError("utility_us: mask and entropy crops differ in size");
  }
  const auto bits = mask_crop.data();
  double sum = 0.0;
  for (std::size_t p = 0; p < bits.size(); ++p) {
    if (bits[p]) sum += entropy_crop.values[p];
  }
  return sum;
}

double utility_rs(Rng& rng) { return rng.uniform01(); }

void score_candidates(StrategyKind strategy, std::span<Candidate> candidates,
                      std::span<const AcquisitionMask> masks, std::span<const EntropyMap> entropies,
                      Rng& rng) {
  if (strategy == StrategyKind::kUS && entropies.size() != masks.size()) {
    throw DimensionError("uncertainty sampling needs one entropy map per training image");
  }
  for (auto& c : candidates) {
    if (c.region.image_index >= masks.size()) throw BoundsError("candidate image index");
    const auto& mask = masks[c.region.image_index];
    switch (strategy) {
      case StrategyKind::kRS:
        c.utility = utility_rs(rng);
        break;
      case StrategyKind::kCS:
        c.utility = utility_cs(crop_mask(mask, c.region));
        break;
      case StrategyKind::kUS:
        c.utility = utility_us(crop_mask(mask, c.region),
                               crop_entropy(entropies[c.region.image_index], c.region));
        break;
    }
  }
}

std::vector<std::size_t> select_top_k(std::span<const double> utilities, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > utilities.size()) {
    throw ConfigError("select_top_k: k=" + std::to_string(k) + " outside [1, " +
                      std::to_string(utilities.size()) + "]");
  }
  for (double u : utilities) {
    if (!std::isfinite(u)) throw DomainError("select_top_k: non-finite utility");
  }
  std::vector<std::size_t> idx(utilities.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return utilities[a] > utilities[b]; });
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace alref
