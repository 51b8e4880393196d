#include "amodal/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace amodal {

namespace {

void require_dims(Size a, Size b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": dimensions differ (" + to_string(a) + " vs " +
                         to_string(b) + ")");
  }
}

constexpr double kFar = 1e20;

// Squared 1-D distance transform (Felzenszwalb & Huttenlocher lower envelope).
// Samples equal to kFar stand for "no source here".
void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
            std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  constexpr double inf = std::numeric_limits<double>::infinity();
  int k = 0;
  v[0] = 0;
  z[0] = -inf;
  z[1] = inf;
  for (int q = 1; q < n; ++q) {
    double s;
    while (true) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    if (s <= z[k]) {
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double dq = q - v[j];
    d[q] = dq * dq + f[v[j]];
  }
}

}  // namespace

Image::Image(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw DimensionError("negative image dimensions");
  data_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill[0];
    data_[i + 1] = fill[1];
    data_[i + 2] = fill[2];
  }
}

RgbaImage::RgbaImage(int width, int height) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw DimensionError("negative image dimensions");
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 4, 0);
}

Image RgbaImage::rgb() const {
  Image out(width_, height_);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const auto p = at(x, y);
      out.set(x, y, {p[0], p[1], p[2]});
    }
  }
  return out;
}

BinaryMask RgbaImage::alpha_mask() const {
  BinaryMask out(width_, height_);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) out.set(x, y, at(x, y)[3] > 0);
  }
  return out;
}

AlphaMap::AlphaMap(Size size, double value) : size_(size) {
  if (value < 0.0 || value > 1.0) throw std::invalid_argument("alpha outside [0,1]");
  values_.assign(static_cast<std::size_t>(size.pixels()), value);
}

void AlphaMap::set(int x, int y, double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("alpha outside [0,1]");
  values_[index(x, y)] = v;
}

Rgb BackgroundFill::pixel(int x, int y) const {
  if (is_solid()) return solid_color();
  return image().at(x, y);
}

Image BackgroundFill::render(Size canvas) const {
  if (is_solid()) return Image(canvas, solid_color());
  require_dims(image().size(), canvas, "background image");
  return image();
}

Image composite(const Image& fg, const BinaryMask& m, const BackgroundFill& bg) {
  require_dims(fg.size(), m.size(), "composite");
  if (!bg.is_solid()) require_dims(fg.size(), bg.image().size(), "composite background");
  Image out = fg;
  for (int y = 0; y < fg.height(); ++y) {
    for (int x = 0; x < fg.width(); ++x) {
      if (!m.at(x, y)) out.set(x, y, bg.pixel(x, y));
    }
  }
  return out;
}

std::vector<double> distance_to_complement(const BinaryMask& m) {
  const int w = m.width();
  const int h = m.height();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> grid(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = m.bits()[i] ? kFar : 0.0;

  const int n = std::max(w, h);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);

  f.resize(h);
  d.resize(h);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = grid[static_cast<std::size_t>(y) * w + x];
    edt_1d(f, d, v, z);
    for (int y = 0; y < h; ++y) grid[static_cast<std::size_t>(y) * w + x] = d[y];
  }
  f.resize(w);
  d.resize(w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[x] = grid[static_cast<std::size_t>(y) * w + x];
    edt_1d(f, d, v, z);
    for (int x = 0; x < w; ++x) {
      grid[static_cast<std::size_t>(y) * w + x] = d[x] >= kFar / 2 ? inf : std::sqrt(d[x]);
    }
  }
  return grid;
}

AlphaMap alpha_transition(const BinaryMask& visible, int width_px) {
  if (width_px < 1) throw std::invalid_argument("transition width must be >= 1");
  const auto dist = distance_to_complement(visible);
  AlphaMap out(visible.size());
  for (int y = 0; y < visible.height(); ++y) {
    for (int x = 0; x < visible.width(); ++x) {
      if (!visible.at(x, y)) continue;
      const double d = dist[static_cast<std::size_t>(y) * visible.width() + x];
      out.set(x, y, d >= width_px ? 1.0 : d / width_px);
    }
  }
  return out;
}

Image alpha_blend(const Image& first, const Image& second, const AlphaMap& a) {
  require_dims(first.size(), second.size(), "alpha_blend");
  require_dims(first.size(), a.size(), "alpha_blend alpha");
  Image out(first.size());
  for (int y = 0; y < first.height(); ++y) {
    for (int x = 0; x < first.width(); ++x) {
      const double w = a.at(x, y);
      const Rgb p = first.at(x, y);
      const Rgb q = second.at(x, y);
      Rgb r;
      for (int c = 0; c < 3; ++c) {
        const double v = w * p[c] + (1.0 - w) * q[c];
        r[c] = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
      out.set(x, y, r);
    }
  }
  return out;
}

RgbaImage assemble_rgba(const Image& blend, const BinaryMask& amodal) {
  require_dims(blend.size(), amodal.size(), "assemble_rgba");
  RgbaImage out(blend.width(), blend.height());
  for (int y = 0; y < blend.height(); ++y) {
    for (int x = 0; x < blend.width(); ++x) {
      if (!amodal.at(x, y)) continue;
      const Rgb p = blend.at(x, y);
      out.set(x, y, {p[0], p[1], p[2], 255});
    }
  }
  return out;
}

PaddedImage pad_canvas(const Image& img, Margins margins, const BackgroundFill& fill) {
  if (margins.top < 0 || margins.bottom < 0 || margins.left < 0 || margins.right < 0) {
    throw std::invalid_argument("pad_canvas: negative margin");
  }
  const Size canvas{img.width() + margins.left + margins.right,
                    img.height() + margins.top + margins.bottom};
  Image out = fill.is_solid() ? Image(canvas, fill.solid_color()) : Image(canvas);
  if (!fill.is_solid()) {
    // An image fill is defined on the original canvas; tile it by clamping.
    const Image& bg = fill.image();
    for (int y = 0; y < canvas.height; ++y) {
      for (int x = 0; x < canvas.width; ++x) {
        const int sx = std::clamp(x - margins.left, 0, bg.width() - 1);
        const int sy = std::clamp(y - margins.top, 0, bg.height() - 1);
        out.set(x, y, bg.at(sx, sy));
      }
    }
  }
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      out.set(x + margins.left, y + margins.top, img.at(x, y));
    }
  }
  return {std::move(out), Offset{margins.left, margins.top}};
}

Image crop(const Image& img, BoundingBox box) {
  if (box.x0 < 0 || box.y0 < 0 || box.x1 > img.width() || box.y1 > img.height() ||
      box.width() < 0 || box.height() < 0) {
    throw DimensionError("crop box outside image");
  }
  Image out(box.width(), box.height());
  for (int y = box.y0; y < box.y1; ++y) {
    for (int x = box.x0; x < box.x1; ++x) out.set(x - box.x0, y - box.y0, img.at(x, y));
  }
  return out;
}

BinaryMask crop(const BinaryMask& m, BoundingBox box) {
  if (box.x0 < 0 || box.y0 < 0 || box.x1 > m.width() || box.y1 > m.height() ||
      box.width() < 0 || box.height() < 0) {
    throw DimensionError("crop box outside mask");
  }
  BinaryMask out(box.width(), box.height());
  for (int y = box.y0; y < box.y1; ++y) {
    for (int x = box.x0; x < box.x1; ++x) out.set(x - box.x0, y - box.y0, m.at(x, y));
  }
  return out;
}

RgbaImage crop(const RgbaImage& img, BoundingBox box) {
  if (box.x0 < 0 || box.y0 < 0 || box.x1 > img.width() || box.y1 > img.height() ||
      box.width() < 0 || box.height() < 0) {
    throw DimensionError("crop box outside image");
  }
  RgbaImage out(box.width(), box.height());
  for (int y = box.y0; y < box.y1; ++y) {
    for (int x = box.x0; x < box.x1; ++x) out.set(x - box.x0, y - box.y0, img.at(x, y));
  }
  return out;
}

Margins margins_for_edges(const EdgeSet& edges, int px) {
  Margins m;
  if (edges.contains(Edge::top)) m.top = px;
  if (edges.contains(Edge::bottom)) m.bottom = px;
  if (edges.contains(Edge::left)) m.left = px;
  if (edges.contains(Edge::right)) m.right = px;
  return m;
}

}  // namespace amodal
