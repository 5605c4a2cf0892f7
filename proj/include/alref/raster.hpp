#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace alref {

/// Default band count (blue, green, red, red-edge, near-infrared).
inline constexpr int kDefaultBands = 5;
/// Default class count (background, soil, herbaceous, woody vegetation).
inline constexpr int kDefaultClasses = 4;

// Coordinates are (i, j) = (column, row) everywhere. Planes are stored
// row-major, so pixel (i, j) lives at j * width + i.

/// Axis-aligned window into one image of a pool.
struct Region {
  std::size_t image_index = 0;
  int x0 = 0;
  int y0 = 0;
  int w = 0;
  int h = 0;

  friend bool operator==(const Region&, const Region&) = default;
};

/// C x W x H reflectance image, band-sequential. Values lie in [0, 1].
class MultiBandRaster {
 public:
  MultiBandRaster() = default;
  /// Zero-filled raster.
  MultiBandRaster(int bands, int width, int height);
  /// Takes ownership of band-sequential values; throws DimensionError on a
  /// size mismatch and DomainError on values outside [0, 1].
  MultiBandRaster(int bands, int width, int height, std::vector<float> values);

  int bands() const { return bands_; }
  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  float at(int band, int i, int j) const { return values_[offset(band, i, j)]; }
  /// Clamps to [0, 1] so the range invariant cannot be broken through this path.
  void set(int band, int i, int j, float v);

  std::span<const float> band(int b) const;
  std::span<const float> values() const { return values_; }

  friend bool operator==(const MultiBandRaster&, const MultiBandRaster&) = default;

 private:
  std::size_t offset(int band, int i, int j) const {
    return (static_cast<std::size_t>(band) * height_ + j) * width_ + i;
  }

  int bands_ = 0;
  int width_ = 0;
  int height_ = 0;
  std::vector<float> values_;
};

/// W x H class-id map with ids in [0, num_classes).
class LabelRaster {
 public:
  LabelRaster() = default;
  LabelRaster(int width, int height, int num_classes = kDefaultClasses, std::uint8_t fill = 0);
  LabelRaster(int width, int height, int num_classes, std::vector<std::uint8_t> labels);

  int width() const { return width_; }
  int height() const { return height_; }
  int num_classes() const { return num_classes_; }
  std::size_t pixel_count() const { return labels_.size(); }

  std::uint8_t operator()(int i, int j) const {
    return labels_[static_cast<std::size_t>(j) * width_ + i];
  }
  /// Throws DomainError for ids >= num_classes.
  void set(int i, int j, int label);

  std::span<const std::uint8_t> data() const { return labels_; }

  friend bool operator==(const LabelRaster&, const LabelRaster&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int num_classes_ = kDefaultClasses;
  std::vector<std::uint8_t> labels_;
};

/// Per-pixel refinement state: 1 = label not refined yet, 0 = refined.
/// Bits only ever go from 1 to 0 after construction.
class AcquisitionMask {
 public:
  AcquisitionMask() = default;
  /// All-ones (nothing refined).
  AcquisitionMask(int width, int height);
  /// Throws DomainError if any entry is not 0 or 1.
  AcquisitionMask(int width, int height, std::vector<std::uint8_t> bits);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return bits_.size(); }

  std::uint8_t operator()(int i, int j) const {
    return bits_[static_cast<std::size_t>(j) * width_ + i];
  }
  /// Marks (i, j) refined; returns true if it was unrefined before.
  bool clear(int i, int j);

  std::size_t count_ones() const;
  std::size_t count_zeros() const { return pixel_count() - count_ones(); }

  std::span<const std::uint8_t> data() const { return bits_; }

  friend bool operator==(const AcquisitionMask&, const AcquisitionMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Throws BoundsError unless r lies within a width x height image.
void check_region(const Region& r, int width, int height);

LabelRaster crop_labels(const LabelRaster& labels, const Region& r);
AcquisitionMask crop_mask(const AcquisitionMask& mask, const Region& r);
MultiBandRaster crop_image(const MultiBandRaster& image, const Region& r);

/// Copies patch into dst with its top-left corner at (x0, y0).
void paste_labels(LabelRaster& dst, const LabelRaster& patch, int x0, int y0);

/// Fraction of pixels per class; sums to 1.
std::vector<double> class_frequencies(const LabelRaster& labels);

}  // namespace alref
