#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "amodal/image.hpp"
#include "amodal/mask.hpp"

namespace testutil {

using namespace amodal;

inline BinaryMask random_mask(std::mt19937_64& rng, int w, int h, double density = 0.5) {
  std::bernoulli_distribution on(density);
  BinaryMask m(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) m.set(x, y, on(rng));
  }
  return m;
}

// Blobby masks: union of a few random rectangles, so morphology has structure.
inline BinaryMask random_blobs(std::mt19937_64& rng, int w, int h, int count = 4) {
  BinaryMask m(w, h);
  std::uniform_int_distribution<int> px(0, w - 1), py(0, h - 1), ext(1, std::max(2, w / 3));
  for (int i = 0; i < count; ++i) {
    const int x0 = px(rng), y0 = py(rng), bw = ext(rng), bh = ext(rng);
    for (int y = y0; y < std::min(h, y0 + bh); ++y) {
      for (int x = x0; x < std::min(w, x0 + bw); ++x) m.set(x, y);
    }
  }
  return m;
}

inline Image random_image(std::mt19937_64& rng, int w, int h) {
  std::uniform_int_distribution<int> v(0, 255);
  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.set(x, y, {std::uint8_t(v(rng)), std::uint8_t(v(rng)), std::uint8_t(v(rng))});
    }
  }
  return img;
}

inline BinaryMask rect_mask(Size s, int x0, int y0, int x1, int y1) {
  BinaryMask m(s);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) m.set(x, y);
  }
  return m;
}

// Literal definitions, used as reference oracles.
inline BinaryMask ref_erode(const BinaryMask& m, const StructuringElement& se) {
  BinaryMask out(m.size());
  const auto offs = se.offsets();
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      bool all = true;
      for (const auto& o : offs) all = all && m.get_or_unset(x + o.dx, y + o.dy);
      out.set(x, y, all);
    }
  }
  return out;
}

inline BinaryMask ref_dilate(const BinaryMask& m, const StructuringElement& se) {
  BinaryMask out(m.size());
  const auto offs = se.offsets();
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      bool any = false;
      for (const auto& o : offs) any = any || m.get_or_unset(x + o.dx, y + o.dy);
      out.set(x, y, any);
    }
  }
  return out;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("amodal_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil
