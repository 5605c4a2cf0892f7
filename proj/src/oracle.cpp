#include "alref/oracle.hpp"

#include <json.hpp>

#include "alref/error.hpp"

namespace alref {

RefinementLedger::RefinementLedger(std::span<const LabelRaster> training_labels) {
  masks_.reserve(training_labels.size());
  for (const auto& l : training_labels) masks_.emplace_back(l.width(), l.height());
}

std::size_t RefinementLedger::total_pixels() const {
  std::size_t n = 0;
  for (const auto& m : masks_) n += m.pixel_count();
  return n;
}

std::string RefinementLedger::to_json() const {
  nlohmann::json j;
  j["refined"] = refined_;
  j["total"] = total_pixels();
  auto& log = j["log"] = nlohmann::json::array();
  for (const auto& e : log_) {
    log.push_back({{"cycle", e.cycle},
                   {"image", e.region.image_index},
                   {"x0", e.region.x0},
                   {"y0", e.region.y0},
                   {"w", e.region.w},
                   {"h", e.region.h},
                   {"newly_refined", e.newly_refined}});
  }
  return j.dump();
}

Oracle::Oracle(OracleConfig cfg) : cfg_(cfg), rng_(cfg.seed) {
  if (!(cfg.keep_coarse_probability >= 0.0 && cfg.keep_coarse_probability <= 1.0)) {
    throw ConfigError("keep_coarse_probability must be in [0,1]");
  }
}

std::size_t Oracle::refine(LabelRaster& current, const LabelRaster& fine, RefinementLedger& ledger,
                           const Region& r, int cycle) {
  if (current.width() != fine.width() || current.height() != fine.height()) {
    throw DimensionError("refine: current and fine labels differ in size");
  }
  if (r.image_index >= ledger.masks_.size()) throw BoundsError("refine: image index not in ledger");
  auto& mask = ledger.masks_[r.image_index];
  if (mask.width() != current.width() || mask.height() != current.height()) {
    throw DimensionError("refine: mask and labels differ in size");
  }
  check_region(r, current.width(), current.height());

  const bool noisy = cfg_.keep_coarse_probability > 0.0;
  std::size_t newly = 0;
  for (int j = r.y0; j < r.y0 + r.h; ++j) {
    for (int i = r.x0; i < r.x0 + r.w; ++i) {
      const bool fresh = mask.clear(i, j);
      newly += fresh;
      if (!noisy) {
        current.set(i, j, fine(i, j));
      } else if (fresh && rng_.uniform01() >= cfg_.keep_coarse_probability) {
        current.set(i, j, fine(i, j));
      }
    }
  }
  ledger.refined_ += newly;
  ledger.log_.push_back({cycle, r, newly});
  return newly;
}

std::size_t refine(LabelRaster& current, const LabelRaster& fine, RefinementLedger& ledger,
                   const Region& r, int cycle) {
  Oracle perfect;
  return perfect.refine(current, fine, ledger, r, cycle);
}

}  // namespace alref
