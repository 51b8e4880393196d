#include "amodal/png_io.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <cstring>
#include <fstream>
#include <memory>

namespace amodal {

namespace {

struct PngImage {
  png_image img;
  PngImage() {
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&img); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

Bytes encode_raw(int width, int height, png_uint_32 format, const std::uint8_t* pixels) {
  PngImage p;
  p.img.width = static_cast<png_uint_32>(width);
  p.img.height = static_cast<png_uint_32>(height);
  p.img.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&p.img, nullptr, &size, 0, pixels, 0, nullptr)) {
    throw PngError(std::string("png encode failed: ") + p.img.message);
  }
  Bytes out(size);
  if (!png_image_write_to_memory(&p.img, out.data(), &size, 0, pixels, 0, nullptr)) {
    throw PngError(std::string("png encode failed: ") + p.img.message);
  }
  out.resize(size);
  return out;
}

struct Decoded {
  int width = 0;
  int height = 0;
  Bytes pixels;
};

Decoded decode_raw(const Bytes& png, png_uint_32 format) {
  if (png.empty()) throw PngError("png decode failed: empty buffer");
  PngImage p;
  if (!png_image_begin_read_from_memory(&p.img, png.data(), png.size())) {
    throw PngError(std::string("png decode failed: ") + p.img.message);
  }
  p.img.format = format;
  Decoded d;
  d.width = static_cast<int>(p.img.width);
  d.height = static_cast<int>(p.img.height);
  d.pixels.resize(PNG_IMAGE_SIZE(p.img));
  // Gray decoding must not apply gamma conversion; background is only used
  // when the source carries alpha.
  if (!png_image_finish_read(&p.img, nullptr, d.pixels.data(), 0, nullptr)) {
    throw PngError(std::string("png decode failed: ") + p.img.message);
  }
  return d;
}

}  // namespace

Bytes encode_png(const BinaryMask& m) {
  Bytes gray(m.bits().size());
  for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = m.bits()[i] ? 255 : 0;
  return encode_raw(m.width(), m.height(), PNG_FORMAT_GRAY, gray.data());
}

Bytes encode_png(const Image& img) {
  return encode_raw(img.width(), img.height(), PNG_FORMAT_RGB, img.data().data());
}

Bytes encode_png(const RgbaImage& img) {
  return encode_raw(img.width(), img.height(), PNG_FORMAT_RGBA, img.data().data());
}

BinaryMask decode_mask_png(const Bytes& png) {
  auto d = decode_raw(png, PNG_FORMAT_GRAY);
  BinaryMask m(d.width, d.height);
  for (std::size_t i = 0; i < d.pixels.size(); ++i) m.bits()[i] = d.pixels[i] != 0;
  return m;
}

Image decode_rgb_png(const Bytes& png) {
  auto d = decode_raw(png, PNG_FORMAT_RGB);
  Image img(d.width, d.height);
  img.data() = std::move(d.pixels);
  return img;
}

RgbaImage decode_rgba_png(const Bytes& png) {
  auto d = decode_raw(png, PNG_FORMAT_RGBA);
  RgbaImage img(d.width, d.height);
  img.data() = std::move(d.pixels);
  return img;
}

void write_file(const std::filesystem::path& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to " + path.string());
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string base64_encode(const Bytes& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

Bytes base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw std::invalid_argument("base64 length not a multiple of 4");
  Bytes out(3 * (text.size() / 4));
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw std::invalid_argument("malformed base64");
  std::size_t len = static_cast<std::size_t>(n);
  // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
  if (!text.empty() && text.back() == '=') --len;
  if (text.size() >= 2 && text[text.size() - 2] == '=') --len;
  out.resize(len);
  return out;
}

}  // namespace amodal
