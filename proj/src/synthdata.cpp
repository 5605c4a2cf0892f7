#include "alref/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include "alref/error.hpp"
#include "alref/rng.hpp"

namespace alref {

namespace {

constexpr std::uint64_t kTagMeans = 0x6D65616E73;  // "means"
constexpr double kMeanLo = 0.05;
constexpr double kMeanHi = 0.95;

bool separated(const std::vector<double>& a, const std::vector<double>& b, double min_gap) {
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::abs(a[k] - b[k]) >= min_gap) return true;
  }
  return false;
}

}  // namespace

void SceneSpec::validate() const {
  if (width < 1 || height < 1) throw ConfigError("scene width/height must be >= 1");
  if (bands < 1) throw ConfigError("scene bands must be >= 1");
  if (num_classes < 1 || num_classes > 256) throw ConfigError("num_classes must be in [1,256]");
  if (blob_count < 1) throw ConfigError("blob_count must be >= 1");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be >= 0");
  if (!(small_object_rate >= 0.0 && small_object_rate <= 1.0)) {
    throw ConfigError("small_object_rate must be in [0,1]");
  }
}

ClassMeans draw_class_means(std::uint64_t seed, int num_classes, int bands, double noise_sigma) {
  Rng rng(derive_seed(seed, {kTagMeans}));
  const double gap = 2.0 * noise_sigma;
  const double near = 0.5 * noise_sigma;
  if (gap > kMeanHi - kMeanLo) throw ConfigError("noise_sigma too large to separate class means");

  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform01(); };

  for (int attempt = 0; attempt < 100000; ++attempt) {
    ClassMeans means(static_cast<std::size_t>(num_classes), std::vector<double>(bands));
    for (auto& m : means) {
      for (auto& v : m) v = uniform(kMeanLo, kMeanHi);
    }
    if (num_classes >= 2) {
      // Spectrally similar pair: one distinguishing band, the rest nearly equal.
      const auto odd_band = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(bands)));
      for (std::size_t b = 0; b < means[1].size(); ++b) {
        if (b == odd_band) continue;
        means[1][b] = std::clamp(means[0][b] + uniform(-near, near), kMeanLo, kMeanHi);
      }
      if (bands == 1) means[1][0] = means[0][0];
      const double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
      means[1][odd_band] = means[0][odd_band] + sign * uniform(gap, gap + 0.25);
      if (means[1][odd_band] < kMeanLo || means[1][odd_band] > kMeanHi) continue;
    }
    bool ok = true;
    for (int a = 0; a < num_classes && ok; ++a) {
      for (int b = a + 1; b < num_classes && ok; ++b) ok = separated(means[a], means[b], gap);
    }
    if (ok) return means;
  }
  throw ConfigError("could not draw separated class means; reduce noise_sigma or num_classes");
}

Scene generate_scene(const SceneSpec& spec) {
  spec.validate();
  return generate_scene(spec, draw_class_means(spec.seed, spec.num_classes, spec.bands,
                                               spec.noise_sigma));
}

Scene generate_scene(const SceneSpec& spec, const ClassMeans& means) {
  spec.validate();
  if (means.size() != static_cast<std::size_t>(spec.num_classes)) {
    throw ConfigError("class mean table does not match num_classes");
  }
  Rng rng(spec.seed);
  const int w = spec.width;
  const int h = spec.height;

  struct Site {
    int x, y, cls;
  };
  std::vector<Site> sites;
  for (int c = 0; c < spec.num_classes; ++c) {
    for (int s = 0; s < spec.blob_count; ++s) {
      const int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(w)));
      const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(h)));
      sites.push_back({x, y, c});
    }
  }

  // Sites are ordered by class, so a strict '<' keeps the lowest id on ties.
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(w) * h);
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      int best = std::numeric_limits<int>::max();
      int cls = 0;
      for (const auto& s : sites) {
        const int d = std::abs(i - s.x) + std::abs(j - s.y);
        if (d < best) {
          best = d;
          cls = s.cls;
        }
      }
      labels[static_cast<std::size_t>(j) * w + i] = static_cast<std::uint8_t>(cls);
    }
  }

  const auto target = static_cast<std::size_t>(
      std::llround(spec.small_object_rate * static_cast<double>(labels.size())));
  std::vector<std::uint8_t> covered(labels.size(), 0);
  std::size_t n_covered = 0;
  while (n_covered < target) {
    const int side = std::min({rng.uniform_int(1, 4), w, h});
    const int x0 = rng.uniform_int(0, w - side);
    const int y0 = rng.uniform_int(0, h - side);
    const auto cls = static_cast<std::uint8_t>(rng.below(static_cast<std::uint64_t>(spec.num_classes)));
    for (int j = y0; j < y0 + side; ++j) {
      for (int i = x0; i < x0 + side; ++i) {
        const auto idx = static_cast<std::size_t>(j) * w + i;
        labels[idx] = cls;
        if (!covered[idx]) {
          covered[idx] = 1;
          ++n_covered;
        }
      }
    }
  }

  std::vector<float> values(static_cast<std::size_t>(spec.bands) * labels.size());
  for (int b = 0; b < spec.bands; ++b) {
    for (std::size_t p = 0; p < labels.size(); ++p) {
      double v = means[labels[p]][b];
      if (spec.noise_sigma > 0.0) v += spec.noise_sigma * rng.normal();
      values[static_cast<std::size_t>(b) * labels.size() + p] =
          static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }

  return Scene{MultiBandRaster(spec.bands, w, h, std::move(values)),
               LabelRaster(w, h, spec.num_classes, std::move(labels))};
}

std::vector<Scene> generate_pool(std::uint64_t seed, int n_images, const SceneSpec& tmpl) {
  if (n_images < 2) {
    throw ConfigError("pool needs >= 2 images for leave-one-out, got " + std::to_string(n_images));
  }
  tmpl.validate();
  const auto means = draw_class_means(seed, tmpl.num_classes, tmpl.bands, tmpl.noise_sigma);
  std::vector<Scene> pool;
  pool.reserve(static_cast<std::size_t>(n_images));
  for (int i = 0; i < n_images; ++i) {
    SceneSpec spec = tmpl;
    spec.seed = seed + static_cast<std::uint64_t>(i);
    pool.push_back(generate_scene(spec, means));
  }
  return pool;
}

}  // namespace alref
