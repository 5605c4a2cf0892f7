#include "alref/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "alref/error.hpp"
#include "alref/rng.hpp"

namespace alref {

namespace {

constexpr double kProbFloor = 1e-12;
constexpr std::size_t kFeatureCacheEntries = 16;

// Softmax of logits in place; returns nothing, writes probabilities into out.
void softmax(std::span<const double> logits, std::span<double> out) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - mx);
    sum += out[k];
  }
  for (auto& v : out) v /= sum;
}

void logits_for(std::span<const double> w, std::size_t stride, int num_classes,
                std::span<const float> f, std::span<double> z) {
  const std::size_t dims = stride - 1;
  for (int k = 0; k < num_classes; ++k) {
    const double* row = w.data() + static_cast<std::size_t>(k) * stride;
    double acc = row[dims];
    for (std::size_t d = 0; d < dims; ++d) acc += row[d] * static_cast<double>(f[d]);
    z[static_cast<std::size_t>(k)] = acc;
  }
}

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t h) {
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t feature_key(const MultiBandRaster& image, int window) {
  const std::int64_t dims[4] = {image.bands(), image.width(), image.height(), window};
  std::uint64_t h = fnv1a(std::span(reinterpret_cast<const std::uint8_t*>(dims), sizeof(dims)),
                          0xCBF29CE484222325ULL);
  const auto v = image.values();
  return fnv1a(std::span(reinterpret_cast<const std::uint8_t*>(v.data()), v.size_bytes()), h);
}

}  // namespace

double ProbabilityMap::max_simplex_violation() const {
  const std::size_t n = pixel_count();
  double worst = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    double sum = 0.0;
    for (int k = 0; k < num_classes; ++k) {
      const float v = probs[static_cast<std::size_t>(k) * n + p];
      if (!(v >= 0.0f)) return std::numeric_limits<double>::infinity();
      sum += v;
    }
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

LabelRaster ProbabilityMap::argmax() const {
  const std::size_t n = pixel_count();
  std::vector<std::uint8_t> out(n, 0);
  for (std::size_t p = 0; p < n; ++p) {
    float best = probs[p];
    for (int k = 1; k < num_classes; ++k) {
      const float v = probs[static_cast<std::size_t>(k) * n + p];
      if (v > best) {
        best = v;
        out[p] = static_cast<std::uint8_t>(k);
      }
    }
  }
  return LabelRaster(width, height, num_classes, std::move(out));
}

EntropyMap crop_entropy(const EntropyMap& h, const Region& r) {
  check_region(r, h.width, h.height);
  EntropyMap out{r.w, r.h, std::vector<double>(static_cast<std::size_t>(r.w) * r.h)};
  for (int j = 0; j < r.h; ++j) {
    for (int i = 0; i < r.w; ++i) {
      out.values[static_cast<std::size_t>(j) * r.w + i] = h(r.x0 + i, r.y0 + j);
    }
  }
  return out;
}

EntropyMap entropy_map(const ProbabilityMap& p) {
  const std::size_t n = p.pixel_count();
  EntropyMap out{p.width, p.height, std::vector<double>(n, 0.0)};
  for (std::size_t px = 0; px < n; ++px) {
    double sum = 0.0;
    for (int k = 0; k < p.num_classes; ++k) sum += p.probs[static_cast<std::size_t>(k) * n + px];
    double h = 0.0;
    if (sum > 0.0) {
      for (int k = 0; k < p.num_classes; ++k) {
        const double q = p.probs[static_cast<std::size_t>(k) * n + px] / sum;
        if (q > 0.0) h -= q * std::log(q);
      }
    }
    out.values[px] = std::max(0.0, h);
  }
  return out;
}

void PredictorConfig::validate() const {
  if (window < 1 || window % 2 == 0) {
    throw ConfigError("window must be odd and >= 1, got " + std::to_string(window));
  }
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ConfigError("adam_beta1 must be in [0,1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ConfigError("adam_beta2 must be in [0,1)");
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be > 0");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (chips_per_epoch < 1) throw ConfigError("chips_per_epoch must be >= 1");
  if (chip_size < 1) throw ConfigError("chip_size must be >= 1");
  if (augmentations & ~(kAugRotate90 | kAugFlipH | kAugFlipV)) {
    throw ConfigError("unknown augmentation bits");
  }
}

FeatureMap extract_features(const MultiBandRaster& image, int window) {
  if (window < 1 || window % 2 == 0) {
    throw ConfigError("window must be odd and >= 1, got " + std::to_string(window));
  }
  const int w = image.width();
  const int h = image.height();
  const int r = window / 2;
  const int dims = 3 * image.bands();
  const std::size_t n = image.pixel_count();
  FeatureMap out{dims, w, h, std::vector<float>(n * static_cast<std::size_t>(dims))};

  std::vector<double> dev(n), hs(n), hq(n);
  for (int b = 0; b < image.bands(); ++b) {
    const auto band = image.band(b);
    double total = 0.0;
    for (float v : band) total += v;
    // Deviations from a float reference keep sums of constant regions exactly 0.
    const auto ref = static_cast<float>(total / static_cast<double>(n));
    for (std::size_t p = 0; p < n; ++p) dev[p] = static_cast<double>(band[p]) - ref;

    for (int j = 0; j < h; ++j) {
      const std::size_t row = static_cast<std::size_t>(j) * w;
      for (int i = 0; i < w; ++i) {
        double s = 0.0, q = 0.0;
        for (int x = std::max(0, i - r); x <= std::min(w - 1, i + r); ++x) {
          const double d = dev[row + x];
          s += d;
          q += d * d;
        }
        hs[row + i] = s;
        hq[row + i] = q;
      }
    }
    for (int j = 0; j < h; ++j) {
      const int y_lo = std::max(0, j - r);
      const int y_hi = std::min(h - 1, j + r);
      for (int i = 0; i < w; ++i) {
        double s = 0.0, q = 0.0;
        for (int y = y_lo; y <= y_hi; ++y) {
          s += hs[static_cast<std::size_t>(y) * w + i];
          q += hq[static_cast<std::size_t>(y) * w + i];
        }
        const int cols = std::min(w - 1, i + r) - std::max(0, i - r) + 1;
        const double count = static_cast<double>(cols) * (y_hi - y_lo + 1);
        const double mean_dev = s / count;
        const double var = std::max(0.0, q / count - mean_dev * mean_dev);
        const std::size_t p = static_cast<std::size_t>(j) * w + i;
        float* f = out.values.data() + p * static_cast<std::size_t>(dims) + 3 * b;
        f[0] = band[p];
        f[1] = static_cast<float>(static_cast<double>(ref) + mean_dev);
        f[2] = static_cast<float>(std::sqrt(var));
      }
    }
  }
  return out;
}

BaselineModel BaselineModel::zeros(int bands, int num_classes, int window) {
  BaselineModel m;
  m.bands = bands;
  m.num_classes = num_classes;
  m.dims = 3 * bands;
  m.window = window;
  const std::size_t size = static_cast<std::size_t>(num_classes) * (m.dims + 1);
  m.weights.assign(size, 0.0f);
  m.adam_m.assign(size, 0.0f);
  m.adam_v.assign(size, 0.0f);
  return m;
}

bool BaselineModel::all_finite() const {
  auto finite = [](const std::vector<float>& v) {
    return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
  };
  return finite(weights) && finite(adam_m) && finite(adam_v);
}

LossAndGradient weighted_cross_entropy(const ProbabilityMap& p, const LabelRaster& labels,
                                       std::span<const double> class_weights,
                                       const AcquisitionMask* mask) {
  if (p.width != labels.width() || p.height != labels.height()) {
    throw DimensionError("weighted_cross_entropy: probabilities and labels differ in size");
  }
  if (class_weights.size() != static_cast<std::size_t>(p.num_classes)) {
    throw DimensionError("weighted_cross_entropy: need one weight per class");
  }
  if (mask && (mask->width() != p.width || mask->height() != p.height)) {
    throw DimensionError("weighted_cross_entropy: mask differs in size");
  }
  for (double w : class_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw DomainError("weighted_cross_entropy: class weights must be finite and >= 0");
    }
  }
  const std::size_t n = p.pixel_count();
  const auto lab = labels.data();
  std::size_t counted = 0;
  for (std::size_t px = 0; px < n; ++px) counted += !mask || mask->data()[px] != 0;

  LossAndGradient out{0.0, std::vector<double>(p.probs.size(), 0.0)};
  if (counted == 0) return out;
  const double inv = 1.0 / static_cast<double>(counted);
  for (std::size_t px = 0; px < n; ++px) {
    if (mask && mask->data()[px] == 0) continue;
    const int y = lab[px];
    const double wy = class_weights[static_cast<std::size_t>(y)];
    const double py = p.probs[static_cast<std::size_t>(y) * n + px];
    out.loss -= wy * std::log(std::max(py, kProbFloor));
    for (int k = 0; k < p.num_classes; ++k) {
      const std::size_t idx = static_cast<std::size_t>(k) * n + px;
      out.grad_logits[idx] = wy * (p.probs[idx] - (k == y ? 1.0 : 0.0)) * inv;
    }
  }
  out.loss *= inv;
  return out;
}

std::vector<double> class_weights(std::span<const LabelRaster> labels, int num_classes,
                                  ClassWeightMode mode) {
  std::vector<double> w(static_cast<std::size_t>(num_classes), 1.0);
  if (mode == ClassWeightMode::kUniform) return w;
  std::vector<double> counts(w.size(), 0.0);
  double total = 0.0;
  for (const auto& l : labels) {
    for (auto v : l.data()) counts[v] += 1.0;
    total += static_cast<double>(l.pixel_count());
  }
  double sum = 0.0;
  int present = 0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (counts[k] > 0.0) {
      w[k] = total / counts[k];
      sum += w[k];
      ++present;
    } else {
      w[k] = 0.0;
    }
  }
  if (present > 0) {
    const double scale = present / sum;
    for (auto& v : w) v *= scale;
  }
  return w;
}

void adam_step(BaselineModel& model, std::span<const double> grad, const PredictorConfig& cfg) {
  if (grad.size() != model.weights.size()) throw DimensionError("adam_step: gradient size");
  ++model.step;
  const double t = static_cast<double>(model.step);
  const double c1 = 1.0 - std::pow(cfg.adam_beta1, t);
  const double c2 = 1.0 - std::pow(cfg.adam_beta2, t);
  for (std::size_t k = 0; k < grad.size(); ++k) {
    const double g = grad[k];
    const double m = cfg.adam_beta1 * model.adam_m[k] + (1.0 - cfg.adam_beta1) * g;
    const double v = cfg.adam_beta2 * model.adam_v[k] + (1.0 - cfg.adam_beta2) * g * g;
    model.adam_m[k] = static_cast<float>(m);
    model.adam_v[k] = static_cast<float>(v);
    const double update = cfg.learning_rate * (m / c1) / (std::sqrt(v / c2) + cfg.adam_eps);
    model.weights[k] = static_cast<float>(model.weights[k] - update);
  }
}

BaselineModel train_on_features(std::span<const FeatureMap* const> features,
                                std::span<const LabelRaster> labels, const PredictorConfig& cfg,
                                int bands, const BaselineModel* init) {
  cfg.validate();
  if (features.empty()) throw ConfigError("train: need at least one training image");
  if (features.size() != labels.size()) {
    throw DimensionError("train: image and label counts differ");
  }
  const int num_classes = labels.front().num_classes();
  for (std::size_t m = 0; m < features.size(); ++m) {
    const auto& f = *features[m];
    if (f.dims != 3 * bands) throw DimensionError("train: feature dims do not match band count");
    if (f.width != labels[m].width() || f.height != labels[m].height()) {
      throw DimensionError("train: labels not aligned with image " + std::to_string(m));
    }
    if (labels[m].num_classes() != num_classes) {
      throw DimensionError("train: label rasters disagree on num_classes");
    }
    if (cfg.chip_size > f.width || cfg.chip_size > f.height) {
      throw ConfigError("chip_size " + std::to_string(cfg.chip_size) +
                        " exceeds image dimensions " + std::to_string(f.width) + "x" +
                        std::to_string(f.height));
    }
  }

  BaselineModel model = init ? *init : BaselineModel::zeros(bands, num_classes, cfg.window);
  if (model.bands != bands || model.num_classes != num_classes || model.window != cfg.window) {
    throw ConfigError("train: warm-start model does not match data or window");
  }
  const auto weights = class_weights(labels, num_classes, cfg.class_weight_mode);
  const std::size_t stride = model.row_stride();
  const std::size_t dims = stride - 1;
  const int cs = cfg.chip_size;
  const auto K = static_cast<std::size_t>(num_classes);

  Rng rng(cfg.seed);
  std::vector<double> w(model.weights.size());
  std::vector<double> grad(model.weights.size());
  std::vector<double> z(K), p(K), x(dims);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int chip = 0; chip < cfg.chips_per_epoch; ++chip) {
      const auto m = static_cast<std::size_t>(rng.below(features.size()));
      const auto& f = *features[m];
      const auto lab = labels[m].data();
      const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(f.width - cs + 1)));
      const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(f.height - cs + 1)));
      // The draws stay so seeds line up with the augmentation settings. The
      // gradient is a sum over the chip's pixels, and a square rotation or flip
      // only permutes them (window mean/std are invariant), so pixels are
      // visited in storage order.
      if (cfg.augmentations & kAugRotate90) rng.below(4);
      if (cfg.augmentations & kAugFlipH) rng.below(2);
      if (cfg.augmentations & kAugFlipV) rng.below(2);

      std::copy(model.weights.begin(), model.weights.end(), w.begin());
      std::fill(grad.begin(), grad.end(), 0.0);
      for (int v = 0; v < cs; ++v) {
        const std::size_t row0 = static_cast<std::size_t>(y0 + v) * f.width + x0;
        const float* fp = f.values.data() + row0 * dims;
        for (int u = 0; u < cs; ++u, fp += dims) {
          for (std::size_t d = 0; d < dims; ++d) x[d] = fp[d];
          for (std::size_t k = 0; k < K; ++k) {
            const double* row = w.data() + k * stride;
            double acc = row[dims];
            for (std::size_t d = 0; d < dims; ++d) acc += row[d] * x[d];
            z[k] = acc;
          }
          softmax(z, p);
          const int y = lab[row0 + static_cast<std::size_t>(u)];
          const double wy = weights[static_cast<std::size_t>(y)];
          if (wy == 0.0) continue;
          for (std::size_t k = 0; k < K; ++k) {
            const double g = wy * (p[k] - (static_cast<int>(k) == y ? 1.0 : 0.0));
            double* row = grad.data() + k * stride;
            for (std::size_t d = 0; d < dims; ++d) row[d] += g * x[d];
            row[dims] += g;
          }
        }
      }
      const double inv = 1.0 / (static_cast<double>(cs) * cs);
      for (auto& g : grad) g *= inv;
      adam_step(model, grad, cfg);
    }
  }
  return model;
}

BaselineModel train(std::span<const MultiBandRaster> images, std::span<const LabelRaster> labels,
                    const PredictorConfig& cfg, const BaselineModel* init) {
  cfg.validate();
  if (images.empty()) throw ConfigError("train: need at least one training image");
  std::vector<FeatureMap> feats;
  feats.reserve(images.size());
  for (const auto& img : images) {
    if (img.bands() != images.front().bands()) throw DimensionError("train: band counts differ");
    feats.push_back(extract_features(img, cfg.window));
  }
  std::vector<const FeatureMap*> ptrs;
  for (const auto& f : feats) ptrs.push_back(&f);
  return train_on_features(ptrs, labels, cfg, images.front().bands(), init);
}

ProbabilityMap predict_proba(const BaselineModel& model, const FeatureMap& features) {
  if (features.dims != model.dims) {
    throw DimensionError("predict_proba: feature dims " + std::to_string(features.dims) +
                         " do not match model dims " + std::to_string(model.dims));
  }
  ProbabilityMap out(model.num_classes, features.width, features.height);
  const std::size_t n = out.pixel_count();
  const auto K = static_cast<std::size_t>(model.num_classes);
  std::vector<double> w(model.weights.begin(), model.weights.end());
  std::vector<double> z(K), p(K);
  for (std::size_t px = 0; px < n; ++px) {
    logits_for(w, model.row_stride(), model.num_classes, features.pixel(px), z);
    softmax(z, p);
    for (std::size_t k = 0; k < K; ++k) out.probs[k * n + px] = static_cast<float>(p[k]);
  }
  return out;
}

ProbabilityMap predict_proba(const BaselineModel& model, const MultiBandRaster& image) {
  if (image.bands() != model.bands) {
    throw DimensionError("predict_proba: image has " + std::to_string(image.bands()) +
                         " bands, model expects " + std::to_string(model.bands));
  }
  return predict_proba(model, extract_features(image, model.window));
}

const FeatureMap& BaselinePredictor::features_for(const MultiBandRaster& image, int window) {
  const auto key = feature_key(image, window);
  for (auto it = cache_.begin(); it != cache_.end(); ++it) {
    if (it->key == key) {
      cache_.splice(cache_.begin(), cache_, it);
      return cache_.front().features;
    }
  }
  cache_.push_front({key, extract_features(image, window)});
  if (cache_.size() > kFeatureCacheEntries) cache_.pop_back();
  return cache_.front().features;
}

void BaselinePredictor::fit(std::span<const MultiBandRaster> images,
                            std::span<const LabelRaster> labels, const PredictorConfig& cfg) {
  cfg.validate();
  if (images.empty()) throw ConfigError("train: need at least one training image");
  const BaselineModel* init = (cfg.warm_start && model_) ? &*model_ : nullptr;
  if (images.size() > kFeatureCacheEntries) {
    model_ = train(images, labels, cfg, init);
    return;
  }
  // Fewer images than cache slots, so no pointer below is evicted while in use.
  std::vector<const FeatureMap*> ptrs;
  for (const auto& img : images) {
    if (img.bands() != images.front().bands()) throw DimensionError("train: band counts differ");
    ptrs.push_back(&features_for(img, cfg.window));
  }
  model_ = train_on_features(ptrs, labels, cfg, images.front().bands(), init);
}

ProbabilityMap BaselinePredictor::predict_proba(const MultiBandRaster& image) {
  if (!model_) throw ConfigError("predict_proba called before fit");
  if (image.bands() != model_->bands) {
    throw DimensionError("predict_proba: image has " + std::to_string(image.bands()) +
                         " bands, model expects " + std::to_string(model_->bands));
  }
  return alref::predict_proba(*model_, features_for(image, model_->window));
}

}  // namespace alref
