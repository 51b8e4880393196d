#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "amodal/image.hpp"
#include "amodal/mask.hpp"

namespace amodal {

class PngError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Bytes = std::vector<std::uint8_t>;

// Masks are single-channel 8-bit PNGs: 0 unset, 255 set. Decoding accepts any
// nonzero value as set.
Bytes encode_png(const BinaryMask& m);
Bytes encode_png(const Image& img);
Bytes encode_png(const RgbaImage& img);

BinaryMask decode_mask_png(const Bytes& png);
Image decode_rgb_png(const Bytes& png);
RgbaImage decode_rgba_png(const Bytes& png);

void write_file(const std::filesystem::path& path, const Bytes& bytes);
Bytes read_file(const std::filesystem::path& path);

inline void save_png(const std::filesystem::path& p, const BinaryMask& m) {
  write_file(p, encode_png(m));
}
inline void save_png(const std::filesystem::path& p, const Image& img) {
  write_file(p, encode_png(img));
}
inline void save_png(const std::filesystem::path& p, const RgbaImage& img) {
  write_file(p, encode_png(img));
}
inline BinaryMask load_mask(const std::filesystem::path& p) {
  return decode_mask_png(read_file(p));
}
inline Image load_image(const std::filesystem::path& p) { return decode_rgb_png(read_file(p)); }
inline RgbaImage load_rgba(const std::filesystem::path& p) {
  return decode_rgba_png(read_file(p));
}

std::string base64_encode(const Bytes& bytes);
// Throws std::invalid_argument on malformed input.
Bytes base64_decode(std::string_view text);

}  // namespace amodal
