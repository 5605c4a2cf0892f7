#include "alref/raster.hpp"

#include <algorithm>
#include <string>

#include "alref/error.hpp"

namespace alref {

namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1) {
    throw DimensionError("raster dimensions must be >= 1, got " + std::to_string(width) + "x" +
                         std::to_string(height));
  }
}

template <class T>
std::vector<T> crop_plane(std::span<const T> src, int src_width, const Region& r) {
  std::vector<T> out(static_cast<std::size_t>(r.w) * r.h);
  for (int j = 0; j < r.h; ++j) {
    const auto row = src.subspan(static_cast<std::size_t>(r.y0 + j) * src_width + r.x0, r.w);
    std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(j) * r.w);
  }
  return out;
}

}  // namespace

MultiBandRaster::MultiBandRaster(int bands, int width, int height)
    : bands_(bands), width_(width), height_(height) {
  check_dims(width, height);
  if (bands < 1) throw DimensionError("band count must be >= 1");
  values_.assign(static_cast<std::size_t>(bands) * width * height, 0.0f);
}

MultiBandRaster::MultiBandRaster(int bands, int width, int height, std::vector<float> values)
    : bands_(bands), width_(width), height_(height), values_(std::move(values)) {
  check_dims(width, height);
  if (bands < 1) throw DimensionError("band count must be >= 1");
  if (values_.size() != static_cast<std::size_t>(bands) * width * height) {
    throw DimensionError("multiband payload has " + std::to_string(values_.size()) +
                         " values, expected C*W*H");
  }
  for (float v : values_) {
    // Written so that NaN fails too.
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw DomainError("reflectance value outside [0,1]: " + std::to_string(v));
    }
  }
}

void MultiBandRaster::set(int band, int i, int j, float v) {
  values_[offset(band, i, j)] = std::clamp(v, 0.0f, 1.0f);
}

std::span<const float> MultiBandRaster::band(int b) const {
  return std::span<const float>(values_).subspan(static_cast<std::size_t>(b) * pixel_count(),
                                                 pixel_count());
}

LabelRaster::LabelRaster(int width, int height, int num_classes, std::uint8_t fill)
    : width_(width), height_(height), num_classes_(num_classes) {
  check_dims(width, height);
  if (num_classes < 1 || num_classes > 256) throw DomainError("num_classes must be in [1,256]");
  if (fill >= num_classes) throw DomainError("fill label outside [0, num_classes)");
  labels_.assign(static_cast<std::size_t>(width) * height, fill);
}

LabelRaster::LabelRaster(int width, int height, int num_classes, std::vector<std::uint8_t> labels)
    : width_(width), height_(height), num_classes_(num_classes), labels_(std::move(labels)) {
  check_dims(width, height);
  if (num_classes < 1 || num_classes > 256) throw DomainError("num_classes must be in [1,256]");
  if (labels_.size() != static_cast<std::size_t>(width) * height) {
    throw DimensionError("label payload size does not match W*H");
  }
  for (auto l : labels_) {
    if (l >= num_classes) {
      throw DomainError("label " + std::to_string(l) + " outside [0, " +
                        std::to_string(num_classes) + ")");
    }
  }
}

void LabelRaster::set(int i, int j, int label) {
  if (label < 0 || label >= num_classes_) {
    throw DomainError("label " + std::to_string(label) + " outside [0, " +
                      std::to_string(num_classes_) + ")");
  }
  labels_[static_cast<std::size_t>(j) * width_ + i] = static_cast<std::uint8_t>(label);
}

AcquisitionMask::AcquisitionMask(int width, int height) : width_(width), height_(height) {
  check_dims(width, height);
  bits_.assign(static_cast<std::size_t>(width) * height, 1);
}

AcquisitionMask::AcquisitionMask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  check_dims(width, height);
  if (bits_.size() != static_cast<std::size_t>(width) * height) {
    throw DimensionError("mask payload size does not match W*H");
  }
  if (std::any_of(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b > 1; })) {
    throw DomainError("mask entries must be 0 or 1");
  }
}

bool AcquisitionMask::clear(int i, int j) {
  auto& b = bits_[static_cast<std::size_t>(j) * width_ + i];
  const bool was_set = b != 0;
  b = 0;
  return was_set;
}

std::size_t AcquisitionMask::count_ones() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

void check_region(const Region& r, int width, int height) {
  if (r.w < 1 || r.h < 1 || r.x0 < 0 || r.y0 < 0 || r.x0 + r.w > width ||
      r.y0 + r.h > height) {
    throw BoundsError("region (" + std::to_string(r.x0) + "," + std::to_string(r.y0) + " " +
                      std::to_string(r.w) + "x" + std::to_string(r.h) + ") outside " +
                      std::to_string(width) + "x" + std::to_string(height) + " raster");
  }
}

LabelRaster crop_labels(const LabelRaster& labels, const Region& r) {
  check_region(r, labels.width(), labels.height());
  return LabelRaster(r.w, r.h, labels.num_classes(), crop_plane(labels.data(), labels.width(), r));
}

AcquisitionMask crop_mask(const AcquisitionMask& mask, const Region& r) {
  check_region(r, mask.width(), mask.height());
  return AcquisitionMask(r.w, r.h, crop_plane(mask.data(), mask.width(), r));
}

MultiBandRaster crop_image(const MultiBandRaster& image, const Region& r) {
  check_region(r, image.width(), image.height());
  std::vector<float> out;
  out.reserve(static_cast<std::size_t>(image.bands()) * r.w * r.h);
  for (int b = 0; b < image.bands(); ++b) {
    auto plane = crop_plane(image.band(b), image.width(), r);
    out.insert(out.end(), plane.begin(), plane.end());
  }
  return MultiBandRaster(image.bands(), r.w, r.h, std::move(out));
}

void paste_labels(LabelRaster& dst, const LabelRaster& patch, int x0, int y0) {
  check_region(Region{0, x0, y0, patch.width(), patch.height()}, dst.width(), dst.height());
  if (patch.num_classes() > dst.num_classes()) {
    throw DomainError("patch has more classes than destination");
  }
  for (int j = 0; j < patch.height(); ++j) {
    for (int i = 0; i < patch.width(); ++i) dst.set(x0 + i, y0 + j, patch(i, j));
  }
}

std::vector<double> class_frequencies(const LabelRaster& labels) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(labels.num_classes()), 0);
  for (auto l : labels.data()) ++counts[l];
  std::vector<double> out(counts.size());
  const auto n = static_cast<double>(labels.pixel_count());
  for (std::size_t k = 0; k < counts.size(); ++k) out[k] = static_cast<double>(counts[k]) / n;
  return out;
}

}  // namespace alref
