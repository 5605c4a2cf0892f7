#pragma once

#include <cstdint>
#include <vector>

#include "alref/raster.hpp"

namespace alref {

enum class ClassOrderPolicy { kRandomPermutation, kFixedList };

struct CoarseSimConfig {
  int min_filter = 2;
  int max_filter = 32;
  std::uint64_t seed = 0;
  ClassOrderPolicy class_order_policy = ClassOrderPolicy::kRandomPermutation;
  std::vector<int> fixed_order;  // used with kFixedList
  int rounds = 1;                // passes over all classes

  void validate(int num_classes) const;
};

/// One applied enlargement.
struct EnlargeStep {
  int cls = 0;
  int fw = 1;
  int fh = 1;

  friend bool operator==(const EnlargeStep&, const EnlargeStep&) = default;
};

struct CoarseResult {
  LabelRaster labels;
  std::vector<EnlargeStep> steps;
};

/// Dilates class c with an fw x fh all-ones structuring element anchored at
/// ((fw-1)/2, (fh-1)/2): output(i,j) = c iff some input pixel of class c lies in
/// columns [i-ax, i+fw-1-ax] x rows [j-ay, j+fh-1-ay] (clipped to the image).
/// Other pixels keep their label. O(W*H) via separable running counts.
LabelRaster enlarge_class(const LabelRaster& labels, int c, int fw, int fh);

/// Enlarges every class once per round, in a seeded random permutation (or
/// cfg.fixed_order), each with filter sides drawn uniformly from
/// [min_filter, max_filter]. The returned steps replay the result exactly.
CoarseResult simulate_coarse(const LabelRaster& labels, const CoarseSimConfig& cfg);

/// Fraction of pixels where the two label maps disagree.
double noise_rate(const LabelRaster& coarse, const LabelRaster& fine);

}  // namespace alref
