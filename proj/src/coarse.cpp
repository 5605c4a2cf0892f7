#include "alref/coarse.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "alref/error.hpp"
#include "alref/rng.hpp"

namespace alref {

void CoarseSimConfig::validate(int num_classes) const {
  if (min_filter < 1) throw ConfigError("min_filter must be >= 1");
  if (max_filter < min_filter) throw ConfigError("max_filter must be >= min_filter");
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (class_order_policy == ClassOrderPolicy::kFixedList) {
    for (int c : fixed_order) {
      if (c < 0 || c >= num_classes) {
        throw ConfigError("fixed_order contains invalid class " + std::to_string(c));
      }
    }
  }
}

LabelRaster enlarge_class(const LabelRaster& labels, int c, int fw, int fh) {
  if (c < 0 || c >= labels.num_classes()) {
    throw DomainError("enlarge_class: class " + std::to_string(c) + " outside [0, " +
                      std::to_string(labels.num_classes()) + ")");
  }
  if (fw < 1 || fh < 1) throw DomainError("enlarge_class: filter sides must be >= 1");

  const int w = labels.width();
  const int h = labels.height();
  const int ax = (fw - 1) / 2;
  const int ay = (fh - 1) / 2;
  const auto cls = static_cast<std::uint8_t>(c);
  const auto src = labels.data();

  // Horizontal pass: row_hit(i,j) = any class-c pixel in columns [i-ax, i+fw-1-ax].
  std::vector<std::uint8_t> row_hit(src.size(), 0);
  std::vector<int> prefix(static_cast<std::size_t>(std::max(w, h)) + 1);
  for (int j = 0; j < h; ++j) {
    const std::size_t base = static_cast<std::size_t>(j) * w;
    prefix[0] = 0;
    for (int i = 0; i < w; ++i) prefix[i + 1] = prefix[i] + (src[base + i] == cls ? 1 : 0);
    if (prefix[w] == 0) continue;
    for (int i = 0; i < w; ++i) {
      const int lo = std::max(0, i - ax);
      const int hi = std::min(w - 1, i + fw - 1 - ax);
      row_hit[base + i] = prefix[hi + 1] - prefix[lo] > 0;
    }
  }

  // Vertical pass over row_hit.
  std::vector<std::uint8_t> out(src.begin(), src.end());
  for (int i = 0; i < w; ++i) {
    prefix[0] = 0;
    for (int j = 0; j < h; ++j) {
      prefix[j + 1] = prefix[j] + row_hit[static_cast<std::size_t>(j) * w + i];
    }
    if (prefix[h] == 0) continue;
    for (int j = 0; j < h; ++j) {
      const int lo = std::max(0, j - ay);
      const int hi = std::min(h - 1, j + fh - 1 - ay);
      if (prefix[hi + 1] - prefix[lo] > 0) out[static_cast<std::size_t>(j) * w + i] = cls;
    }
  }
  return LabelRaster(w, h, labels.num_classes(), std::move(out));
}

CoarseResult simulate_coarse(const LabelRaster& labels, const CoarseSimConfig& cfg) {
  cfg.validate(labels.num_classes());
  Rng rng(cfg.seed);
  CoarseResult result{labels, {}};
  for (int round = 0; round < cfg.rounds; ++round) {
    std::vector<int> order;
    if (cfg.class_order_policy == ClassOrderPolicy::kFixedList) {
      order = cfg.fixed_order;
    } else {
      order.resize(static_cast<std::size_t>(labels.num_classes()));
      std::iota(order.begin(), order.end(), 0);
      rng.shuffle(std::span<int>(order));
    }
    for (int c : order) {
      const int fw = rng.uniform_int(cfg.min_filter, cfg.max_filter);
      const int fh = rng.uniform_int(cfg.min_filter, cfg.max_filter);
      result.labels = enlarge_class(result.labels, c, fw, fh);
      result.steps.push_back({c, fw, fh});
    }
  }
  return result;
}

double noise_rate(const LabelRaster& coarse, const LabelRaster& fine) {
  if (coarse.width() != fine.width() || coarse.height() != fine.height()) {
    throw DimensionError("noise_rate: label rasters differ in size");
  }
  const auto a = coarse.data();
  const auto b = fine.data();
  std::size_t diff = 0;
  for (std::size_t k = 0; k < a.size(); ++k) diff += a[k] != b[k];
  return static_cast<double>(diff) / static_cast<double>(a.size());
}

}  // namespace alref
