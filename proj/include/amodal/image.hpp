#pragma once

#include <array>
#include <cstdint>
#include <variant>
#include <vector>

#include "amodal/mask.hpp"

namespace amodal {

using Rgb = std::array<std::uint8_t, 3>;

/// 8-bit RGB raster, row-major, interleaved.
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = {0, 0, 0});
  explicit Image(Size size, Rgb fill = {0, 0, 0}) : Image(size.width, size.height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  Size size() const { return {width_, height_}; }
  bool in_bounds(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  Rgb at(int x, int y) const {
    const std::size_t i = index(x, y);
    return {data_[i], data_[i + 1], data_[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    const std::size_t i = index(x, y);
    data_[i] = c[0];
    data_[i + 1] = c[1];
    data_[i + 2] = c[2];
  }

  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& data() { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// 8-bit RGBA raster. Pipeline output carries a binary alpha channel.
class RgbaImage {
 public:
  RgbaImage() = default;
  RgbaImage(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  Size size() const { return {width_, height_}; }

  std::array<std::uint8_t, 4> at(int x, int y) const {
    const std::size_t i = index(x, y);
    return {data_[i], data_[i + 1], data_[i + 2], data_[i + 3]};
  }
  void set(int x, int y, std::array<std::uint8_t, 4> c) {
    const std::size_t i = index(x, y);
    for (int k = 0; k < 4; ++k) data_[i + k] = c[k];
  }

  Image rgb() const;
  BinaryMask alpha_mask() const;  // alpha > 0

  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& data() { return data_; }

  friend bool operator==(const RgbaImage&, const RgbaImage&) = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * 4;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Per-pixel blend weight in [0,1].
class AlphaMap {
 public:
  AlphaMap() = default;
  AlphaMap(Size size, double value = 0.0);

  int width() const { return size_.width; }
  int height() const { return size_.height; }
  Size size() const { return size_; }

  double at(int x, int y) const { return values_[index(x, y)]; }
  void set(int x, int y, double v);

  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(size_.width) +
           static_cast<std::size_t>(x);
  }

  Size size_;
  std::vector<double> values_;
};

/// The "clean background" substituted for everything outside the target.
class BackgroundFill {
 public:
  static constexpr Rgb kDefaultGray{127, 127, 127};

  BackgroundFill() : fill_(kDefaultGray) {}
  static BackgroundFill solid(Rgb c) { return BackgroundFill(c); }
  static BackgroundFill image(Image img) { return BackgroundFill(std::move(img)); }

  bool is_solid() const { return std::holds_alternative<Rgb>(fill_); }
  Rgb solid_color() const { return std::get<Rgb>(fill_); }
  const Image& image() const { return std::get<Image>(fill_); }

  // Background pixel at (x, y) of a canvas of `canvas` size.
  Rgb pixel(int x, int y) const;
  Image render(Size canvas) const;

  friend bool operator==(const BackgroundFill&, const BackgroundFill&) = default;

 private:
  explicit BackgroundFill(Rgb c) : fill_(c) {}
  explicit BackgroundFill(Image img) : fill_(std::move(img)) {}

  std::variant<Rgb, Image> fill_;
};

struct Margins {
  int top = 0;
  int bottom = 0;
  int left = 0;
  int right = 0;
  friend bool operator==(const Margins&, const Margins&) = default;
};

struct PaddedImage {
  Image image;
  Offset offset;
};

Image composite(const Image& fg, const BinaryMask& m, const BackgroundFill& bg);

/// Euclidean distance from every set pixel of `m` to the nearest unset
/// pixel inside the canvas; +inf where the canvas has no unset pixel, 0 on
/// unset pixels.
std::vector<double> distance_to_complement(const BinaryMask& m);

AlphaMap alpha_transition(const BinaryMask& visible, int width_px);

/// a * first + (1 - a) * second per channel, rounded half up.
Image alpha_blend(const Image& first, const Image& second, const AlphaMap& a);

RgbaImage assemble_rgba(const Image& blend, const BinaryMask& amodal);

PaddedImage pad_canvas(const Image& img, Margins margins, const BackgroundFill& fill);
Image crop(const Image& img, BoundingBox box);
BinaryMask crop(const BinaryMask& m, BoundingBox box);
RgbaImage crop(const RgbaImage& img, BoundingBox box);

Margins margins_for_edges(const EdgeSet& edges, int px);

}  // namespace amodal
