#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "alref/raster.hpp"

namespace alref {

/// Parameters of one synthetic multi-band scene.
struct SceneSpec {
  std::uint64_t seed = 0;
  int width = 256;
  int height = 256;
  int bands = kDefaultBands;
  int num_classes = kDefaultClasses;
  int blob_count = 6;             // seed sites per class
  double noise_sigma = 0.10;      // reflectance std dev
  double small_object_rate = 0.03;  // fraction of pixels covered by 1-4 px objects

  /// Throws ConfigError naming the bad field.
  void validate() const;
};

/// Per-class spectral means, indexed [class][band].
using ClassMeans = std::vector<std::vector<double>>;

/// Draws class means: every pair of classes differs by >= 2 sigma in at least
/// one band, and classes 0 and 1 (background/soil) agree within 0.5 sigma in
/// every band but one.
ClassMeans draw_class_means(std::uint64_t seed, int num_classes, int bands, double noise_sigma);

struct Scene {
  MultiBandRaster image;
  LabelRaster labels;
};

/// Scene whose class means are drawn from spec.seed.
Scene generate_scene(const SceneSpec& spec);

/// Scene with an externally supplied class-mean table (shared across a pool).
/// Label layout: nearest seed site under the Manhattan metric, ties to the
/// lowest class id, then small square objects of random class. Pixel value =
/// clip(mean[class][band] + N(0, sigma), 0, 1).
Scene generate_scene(const SceneSpec& spec, const ClassMeans& means);

/// n_images scenes with seeds seed + i and one shared class-mean table.
/// Throws ConfigError for n_images < 2.
std::vector<Scene> generate_pool(std::uint64_t seed, int n_images, const SceneSpec& tmpl);

}  // namespace alref
