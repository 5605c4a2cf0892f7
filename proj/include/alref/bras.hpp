#pragma once

// BRAS raster container:
//   "BRAS" | u8 kind | u32le C | u32le W | u32le H | band-sequential payload
// kind 0 = multiband f32le, 1 = labels u8, 2 = mask u8. Label and mask files
// carry C = 1.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "alref/raster.hpp"

namespace alref {

enum class BrasKind : std::uint8_t { kMultiBand = 0, kLabels = 1, kMask = 2 };

std::vector<std::uint8_t> encode_bras(const MultiBandRaster& image);
std::vector<std::uint8_t> encode_bras(const LabelRaster& labels);
std::vector<std::uint8_t> encode_bras(const AcquisitionMask& mask);

/// Decoders throw FormatError on wrong magic, wrong kind, or a payload that
/// does not match the header exactly.
MultiBandRaster decode_bras_image(std::span<const std::uint8_t> bytes);
LabelRaster decode_bras_labels(std::span<const std::uint8_t> bytes,
                               int num_classes = kDefaultClasses);
AcquisitionMask decode_bras_mask(std::span<const std::uint8_t> bytes);

void write_bras(const std::filesystem::path& path, const MultiBandRaster& image);
void write_bras(const std::filesystem::path& path, const LabelRaster& labels);
void write_bras(const std::filesystem::path& path, const AcquisitionMask& mask);

MultiBandRaster read_bras_image(const std::filesystem::path& path);
LabelRaster read_bras_labels(const std::filesystem::path& path, int num_classes = kDefaultClasses);
AcquisitionMask read_bras_mask(const std::filesystem::path& path);

/// Whole-file helpers shared with the CLI; throw IoError naming the path.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace alref
