#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "alref/raster.hpp"
#include "alref/rng.hpp"

namespace alref {

struct RefinementLogEntry {
  int cycle = 0;
  Region region;
  std::size_t newly_refined = 0;
};

/// Acquisition masks for the training images plus an audit log of refinements.
/// The refined count always equals the number of zero bits across masks.
class RefinementLedger {
 public:
  RefinementLedger() = default;
  /// One all-ones mask per label raster.
  explicit RefinementLedger(std::span<const LabelRaster> training_labels);

  std::span<const AcquisitionMask> masks() const { return masks_; }
  std::size_t refined() const { return refined_; }
  std::size_t total_pixels() const;
  const std::vector<RefinementLogEntry>& log() const { return log_; }

  /// Cycle log as JSON: {"refined": n, "total": n, "log": [{cycle, image, x0, y0, w, h, newly_refined}]}.
  std::string to_json() const;

 private:
  friend class Oracle;

  std::vector<AcquisitionMask> masks_;
  std::size_t refined_ = 0;
  std::vector<RefinementLogEntry> log_;
};

struct OracleConfig {
  /// Probability that a newly refined pixel keeps its current (coarse) label.
  double keep_coarse_probability = 0.0;
  std::uint64_t seed = 0;
};

/// Simulated expert. The default configuration is perfect: it copies the fine
/// labels of the region.
class Oracle {
 public:
  Oracle() : Oracle(OracleConfig{}) {}
  explicit Oracle(OracleConfig cfg);

  /// Refines r (which indexes ledger masks via r.image_index) in current, clears
  /// the mask, logs the event and returns how many mask bits went 1 -> 0.
  std::size_t refine(LabelRaster& current, const LabelRaster& fine, RefinementLedger& ledger,
                     const Region& r, int cycle = 0);

 private:
  OracleConfig cfg_;
  Rng rng_;
};

/// Perfect-oracle refinement.
std::size_t refine(LabelRaster& current, const LabelRaster& fine, RefinementLedger& ledger,
                   const Region& r, int cycle = 0);

}  // namespace alref
