#include "alref/bras.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "alref/error.hpp"

namespace alref {

namespace {

constexpr std::size_t kHeaderSize = 4 + 1 + 3 * 4;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(in[at + k]) << (8 * k);
  return v;
}

std::vector<std::uint8_t> header(BrasKind kind, int c, int w, int h) {
  std::vector<std::uint8_t> out{'B', 'R', 'A', 'S', static_cast<std::uint8_t>(kind)};
  put_u32(out, static_cast<std::uint32_t>(c));
  put_u32(out, static_cast<std::uint32_t>(w));
  put_u32(out, static_cast<std::uint32_t>(h));
  return out;
}

struct Header {
  std::uint32_t c, w, h;
};

Header parse_header(std::span<const std::uint8_t> bytes, BrasKind expected, std::size_t elem_size) {
  if (bytes.size() < kHeaderSize) throw FormatError("BRAS: truncated header");
  if (std::memcmp(bytes.data(), "BRAS", 4) != 0) throw FormatError("BRAS: bad magic");
  if (bytes[4] != static_cast<std::uint8_t>(expected)) {
    throw FormatError("BRAS: kind " + std::to_string(bytes[4]) + ", expected " +
                      std::to_string(static_cast<int>(expected)));
  }
  Header hd{get_u32(bytes, 5), get_u32(bytes, 9), get_u32(bytes, 13)};
  if (hd.c == 0 || hd.w == 0 || hd.h == 0) throw FormatError("BRAS: zero dimension");
  if (expected != BrasKind::kMultiBand && hd.c != 1) {
    throw FormatError("BRAS: label/mask file must have C = 1");
  }
  const auto want = static_cast<std::uint64_t>(hd.c) * hd.w * hd.h * elem_size;
  if (bytes.size() - kHeaderSize != want) {
    throw FormatError("BRAS: payload is " + std::to_string(bytes.size() - kHeaderSize) +
                      " bytes, header implies " + std::to_string(want));
  }
  return hd;
}

}  // namespace

std::vector<std::uint8_t> encode_bras(const MultiBandRaster& image) {
  auto out = header(BrasKind::kMultiBand, image.bands(), image.width(), image.height());
  out.reserve(kHeaderSize + image.values().size() * 4);
  for (float v : image.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

std::vector<std::uint8_t> encode_bras(const LabelRaster& labels) {
  auto out = header(BrasKind::kLabels, 1, labels.width(), labels.height());
  out.insert(out.end(), labels.data().begin(), labels.data().end());
  return out;
}

std::vector<std::uint8_t> encode_bras(const AcquisitionMask& mask) {
  auto out = header(BrasKind::kMask, 1, mask.width(), mask.height());
  out.insert(out.end(), mask.data().begin(), mask.data().end());
  return out;
}

MultiBandRaster decode_bras_image(std::span<const std::uint8_t> bytes) {
  const auto hd = parse_header(bytes, BrasKind::kMultiBand, 4);
  std::vector<float> values(static_cast<std::size_t>(hd.c) * hd.w * hd.h);
  for (std::size_t k = 0; k < values.size(); ++k) {
    values[k] = std::bit_cast<float>(get_u32(bytes, kHeaderSize + 4 * k));
  }
  return MultiBandRaster(static_cast<int>(hd.c), static_cast<int>(hd.w), static_cast<int>(hd.h),
                         std::move(values));
}

LabelRaster decode_bras_labels(std::span<const std::uint8_t> bytes, int num_classes) {
  const auto hd = parse_header(bytes, BrasKind::kLabels, 1);
  return LabelRaster(static_cast<int>(hd.w), static_cast<int>(hd.h), num_classes,
                     std::vector<std::uint8_t>(bytes.begin() + kHeaderSize, bytes.end()));
}

AcquisitionMask decode_bras_mask(std::span<const std::uint8_t> bytes) {
  const auto hd = parse_header(bytes, BrasKind::kMask, 1);
  return AcquisitionMask(static_cast<int>(hd.w), static_cast<int>(hd.h),
                         std::vector<std::uint8_t>(bytes.begin() + kHeaderSize, bytes.end()));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void write_bras(const std::filesystem::path& path, const MultiBandRaster& image) {
  write_file_bytes(path, encode_bras(image));
}
void write_bras(const std::filesystem::path& path, const LabelRaster& labels) {
  write_file_bytes(path, encode_bras(labels));
}
void write_bras(const std::filesystem::path& path, const AcquisitionMask& mask) {
  write_file_bytes(path, encode_bras(mask));
}

MultiBandRaster read_bras_image(const std::filesystem::path& path) {
  return decode_bras_image(read_file_bytes(path));
}
LabelRaster read_bras_labels(const std::filesystem::path& path, int num_classes) {
  return decode_bras_labels(read_file_bytes(path), num_classes);
}
AcquisitionMask read_bras_mask(const std::filesystem::path& path) {
  return decode_bras_mask(read_file_bytes(path));
}

}  // namespace alref
