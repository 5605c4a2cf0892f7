#pragma once

#include <cstdint>
#include <list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alref/raster.hpp"

namespace alref {

/// K x W x H class-membership probabilities, class-major
/// (index k * W * H + j * W + i). Each pixel sums to 1 within 1e-6.
struct ProbabilityMap {
  int num_classes = 0;
  int width = 0;
  int height = 0;
  std::vector<float> probs;

  ProbabilityMap() = default;
  ProbabilityMap(int k, int w, int h)
      : num_classes(k), width(w), height(h),
        probs(static_cast<std::size_t>(k) * w * h, 0.0f) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  float at(int k, int i, int j) const {
    return probs[(static_cast<std::size_t>(k) * height + j) * width + i];
  }
  float& at(int k, int i, int j) {
    return probs[(static_cast<std::size_t>(k) * height + j) * width + i];
  }

  /// Largest |sum_k p_k - 1| over pixels; +inf if any entry is negative or NaN.
  double max_simplex_violation() const;
  /// Arg-max class per pixel (lowest id on ties).
  LabelRaster argmax() const;

  friend bool operator==(const ProbabilityMap&, const ProbabilityMap&) = default;
};

/// Per-pixel predictive entropy in nats, W x H row-major.
struct EntropyMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  double operator()(int i, int j) const {
    return values[static_cast<std::size_t>(j) * width + i];
  }
};

EntropyMap crop_entropy(const EntropyMap& h, const Region& r);

/// H(i,j) = -sum_k p_k ln p_k with 0 ln 0 = 0. Probabilities are renormalized
/// in double precision first so H never exceeds ln K by more than rounding.
EntropyMap entropy_map(const ProbabilityMap& p);

enum Augmentation : unsigned {
  kAugRotate90 = 1u << 0,
  kAugFlipH = 1u << 1,
  kAugFlipV = 1u << 2,
};

enum class ClassWeightMode { kInverseFrequency, kUniform };

struct PredictorConfig {
  int window = 5;
  double learning_rate = 1e-2;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 15;
  int chips_per_epoch = 64;
  int chip_size = 128;
  unsigned augmentations = kAugRotate90 | kAugFlipH | kAugFlipV;
  ClassWeightMode class_weight_mode = ClassWeightMode::kInverseFrequency;
  std::uint64_t seed = 0;
  bool warm_start = false;

  /// Static checks; chip_size against the images happens in train().
  void validate() const;
};

/// D x W x H features stored pixel-major (index (j * W + i) * D + d). For each
/// band: raw value, window mean, window population std; D = 3 * C. Windows are
/// clipped at the image border.
struct FeatureMap {
  int dims = 0;
  int width = 0;
  int height = 0;
  std::vector<float> values;

  std::span<const float> pixel(std::size_t p) const {
    return std::span<const float>(values).subspan(p * static_cast<std::size_t>(dims),
                                                  static_cast<std::size_t>(dims));
  }
};

/// Throws ConfigError for an even or non-positive window.
FeatureMap extract_features(const MultiBandRaster& image, int window);

/// Multinomial softmax over windowed features, with Adam state.
struct BaselineModel {
  int bands = 0;
  int num_classes = 0;
  int dims = 0;  // 3 * bands
  int window = 0;
  std::int64_t step = 0;
  std::vector<float> weights;  // num_classes x (dims + 1), bias last in each row
  std::vector<float> adam_m;
  std::vector<float> adam_v;

  static BaselineModel zeros(int bands, int num_classes, int window);
  std::size_t row_stride() const { return static_cast<std::size_t>(dims) + 1; }
  bool all_finite() const;

  friend bool operator==(const BaselineModel&, const BaselineModel&) = default;
};

struct LossAndGradient {
  double loss = 0.0;
  /// d loss / d logits, same layout as ProbabilityMap. For a counted pixel this
  /// is w[y] * (p - onehot(y)) / n_counted, i.e. the gradient of the mean.
  std::vector<double> grad_logits;
};

/// Mean over counted pixels of -w[y] ln p[y], with p clamped at 1e-12 inside
/// the log. A null mask counts every pixel; otherwise pixels with mask 1 count.
LossAndGradient weighted_cross_entropy(const ProbabilityMap& p, const LabelRaster& labels,
                                       std::span<const double> class_weights,
                                       const AcquisitionMask* mask = nullptr);

/// Class weights per mode over the given labels: inverse frequency normalized to
/// mean 1 over the classes present, absent classes 0; or all ones.
std::vector<double> class_weights(std::span<const LabelRaster> labels, int num_classes,
                                  ClassWeightMode mode);

/// One Adam update of all weights with gradient grad (same layout as weights).
void adam_step(BaselineModel& model, std::span<const double> grad, const PredictorConfig& cfg);

/// Trains from zero weights, or continues from init when given. Per epoch,
/// samples chips_per_epoch chips (uniform image, uniform offset), applies the
/// seeded augmentation and takes one Adam step on the chip's pixels.
BaselineModel train(std::span<const MultiBandRaster> images, std::span<const LabelRaster> labels,
                    const PredictorConfig& cfg, const BaselineModel* init = nullptr);

/// Same as train() on precomputed features (all built with cfg.window).
BaselineModel train_on_features(std::span<const FeatureMap* const> features,
                                std::span<const LabelRaster> labels, const PredictorConfig& cfg,
                                int bands, const BaselineModel* init = nullptr);

ProbabilityMap predict_proba(const BaselineModel& model, const MultiBandRaster& image);
ProbabilityMap predict_proba(const BaselineModel& model, const FeatureMap& features);

/// Checkpoint: JSON header (C, K_cls, D, window, step) with base64 f32le
/// weights and Adam moments. Round trip is bit-exact.
std::string save_checkpoint(const BaselineModel& model);
BaselineModel load_checkpoint(std::string_view json_text);

/// Predictor contract consumed by the active-learning loop.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual void fit(std::span<const MultiBandRaster> images, std::span<const LabelRaster> labels,
                   const PredictorConfig& cfg) = 0;
  virtual ProbabilityMap predict_proba(const MultiBandRaster& image) = 0;
};

/// In-process baseline. Keeps a small content-addressed feature cache, since the
/// loop re-presents the same images every cycle.
class BaselinePredictor final : public Predictor {
 public:
  void fit(std::span<const MultiBandRaster> images, std::span<const LabelRaster> labels,
           const PredictorConfig& cfg) override;
  ProbabilityMap predict_proba(const MultiBandRaster& image) override;

  const std::optional<BaselineModel>& model() const { return model_; }

 private:
  const FeatureMap& features_for(const MultiBandRaster& image, int window);

  struct CacheEntry {
    std::uint64_t key;
    FeatureMap features;
  };
  std::optional<BaselineModel> model_;
  std::list<CacheEntry> cache_;
};

}  // namespace alref
