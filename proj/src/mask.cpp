#include "amodal/mask.hpp"

#include <algorithm>
#include <numeric>

namespace amodal {

std::string to_string(Size s) {
  return std::to_string(s.width) + "x" + std::to_string(s.height);
}

BinaryMask::BinaryMask(int width, int height, bool value) : width_(width), height_(height) {
  if (width < 0 || height < 0) {
    throw DimensionError("negative mask dimensions " + std::to_string(width) + "x" +
                         std::to_string(height));
  }
  bits_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
               value ? 1 : 0);
}

long long BinaryMask::area() const {
  return std::count(bits_.begin(), bits_.end(), std::uint8_t{1});
}

void require_same_size(const BinaryMask& a, const BinaryMask& b, const char* what) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(what) + ": mask dimensions differ (" +
                         to_string(a.size()) + " vs " + to_string(b.size()) + ")");
  }
}

BinaryMask boolean(BoolOp op, const BinaryMask& a, const BinaryMask& b) {
  require_same_size(a, b, "boolean");
  BinaryMask out(a.size());
  auto& o = out.bits();
  const auto& x = a.bits();
  const auto& y = b.bits();
  for (std::size_t i = 0; i < o.size(); ++i) {
    switch (op) {
      case BoolOp::union_: o[i] = x[i] | y[i]; break;
      case BoolOp::intersect: o[i] = x[i] & y[i]; break;
      case BoolOp::subtract: o[i] = x[i] & (1 - y[i]); break;
    }
  }
  return out;
}

BinaryMask complement(const BinaryMask& m) {
  BinaryMask out(m.size());
  for (std::size_t i = 0; i < out.bits().size(); ++i) out.bits()[i] = 1 - m.bits()[i];
  return out;
}

bool is_subset(const BinaryMask& inner, const BinaryMask& outer) {
  require_same_size(inner, outer, "is_subset");
  for (std::size_t i = 0; i < inner.bits().size(); ++i) {
    if (inner.bits()[i] && !outer.bits()[i]) return false;
  }
  return true;
}

bool intersects(const BinaryMask& a, const BinaryMask& b) {
  require_same_size(a, b, "intersects");
  for (std::size_t i = 0; i < a.bits().size(); ++i) {
    if (a.bits()[i] && b.bits()[i]) return true;
  }
  return false;
}

std::vector<Offset> StructuringElement::offsets() const {
  if (radius < 1) throw std::invalid_argument("structuring element radius must be >= 1");
  std::vector<Offset> out;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (shape == Shape::disk && dx * dx + dy * dy > radius * radius) continue;
      out.push_back({dx, dy});
    }
  }
  return out;
}

namespace {

// One separable pass of a square element along a line of `n` samples read
// through `get`. `all` selects erosion (every sample set) vs dilation (any).
template <typename Get, typename Put>
void line_pass(int n, int r, bool all, bool outside_set, Get get, Put put) {
  std::vector<int> prefix(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + (get(i) ? 1 : 0);
  for (int i = 0; i < n; ++i) {
    const int lo = i - r;
    const int hi = i + r;
    const int clo = std::max(lo, 0);
    const int chi = std::min(hi, n - 1);
    const int count = prefix[chi + 1] - prefix[clo];
    bool v;
    if (all) {
      const bool clipped = lo < 0 || hi > n - 1;
      v = count == chi - clo + 1 && (!clipped || outside_set);
    } else {
      v = count > 0;
    }
    put(i, v);
  }
}

BinaryMask square_pass(const BinaryMask& m, int r, bool all, bool outside_set) {
  const int w = m.width();
  const int h = m.height();
  BinaryMask rows(m.size());
  for (int y = 0; y < h; ++y) {
    line_pass(
        w, r, all, outside_set, [&](int x) { return m.at(x, y); },
        [&](int x, bool v) { rows.set(x, y, v); });
  }
  BinaryMask out(m.size());
  for (int x = 0; x < w; ++x) {
    line_pass(
        h, r, all, outside_set, [&](int y) { return rows.at(x, y); },
        [&](int y, bool v) { out.set(x, y, v); });
  }
  return out;
}

}  // namespace

BinaryMask erode(const BinaryMask& m, StructuringElement se, Border border) {
  if (se.radius < 1) throw std::invalid_argument("structuring element radius must be >= 1");
  if (m.width() == 0 || m.height() == 0) return m;
  const bool outside_set = border == Border::set;
  if (se.shape == StructuringElement::Shape::square) {
    return square_pass(m, se.radius, true, outside_set);
  }
  const auto offs = se.offsets();
  BinaryMask out(m.size());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y)) continue;
      bool keep = true;
      for (const auto& o : offs) {
        const int xx = x + o.dx;
        const int yy = y + o.dy;
        const bool v = m.in_bounds(xx, yy) ? m.at(xx, yy) : outside_set;
        if (!v) {
          keep = false;
          break;
        }
      }
      out.set(x, y, keep);
    }
  }
  return out;
}

BinaryMask dilate(const BinaryMask& m, StructuringElement se) {
  if (se.radius < 1) throw std::invalid_argument("structuring element radius must be >= 1");
  if (m.width() == 0 || m.height() == 0) return m;
  if (se.shape == StructuringElement::Shape::square) {
    return square_pass(m, se.radius, false, false);
  }
  const auto offs = se.offsets();
  BinaryMask out(m.size());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y)) continue;
      for (const auto& o : offs) {
        const int xx = x + o.dx;
        const int yy = y + o.dy;
        if (out.in_bounds(xx, yy)) out.set(xx, yy);
      }
    }
  }
  return out;
}

BinaryMask close(const BinaryMask& m, StructuringElement se) {
  return erode(dilate(m, se), se, Border::set);
}

BinaryMask open(const BinaryMask& m, StructuringElement se) {
  return dilate(erode(m, se), se);
}

std::vector<BinaryMask> connected_components(const BinaryMask& m, Connectivity c) {
  const int w = m.width();
  const int h = m.height();
  std::vector<int> label(m.bits().size(), -1);
  struct Comp {
    std::vector<int> pixels;
    int first;
  };
  std::vector<Comp> comps;
  std::vector<int> stack;
  const bool eight = c == Connectivity::eight;

  for (int start = 0; start < w * h; ++start) {
    if (!m.bits()[start] || label[start] >= 0) continue;
    const int id = static_cast<int>(comps.size());
    comps.push_back({{}, start});
    label[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      comps[id].pixels.push_back(p);
      const int px = p % w;
      const int py = p / w;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          if (!eight && dx != 0 && dy != 0) continue;
          const int nx = px + dx;
          const int ny = py + dy;
          if (!m.in_bounds(nx, ny)) continue;
          const int q = ny * w + nx;
          if (m.bits()[q] && label[q] < 0) {
            label[q] = id;
            stack.push_back(q);
          }
        }
      }
    }
  }

  std::stable_sort(comps.begin(), comps.end(), [](const Comp& a, const Comp& b) {
    return a.pixels.size() > b.pixels.size();
  });

  std::vector<BinaryMask> out;
  out.reserve(comps.size());
  for (const auto& comp : comps) {
    BinaryMask cm(m.size());
    for (int p : comp.pixels) cm.bits()[p] = 1;
    out.push_back(std::move(cm));
  }
  return out;
}

long long l1_diff(const BinaryMask& a, const BinaryMask& b) {
  require_same_size(a, b, "l1_diff");
  long long n = 0;
  for (std::size_t i = 0; i < a.bits().size(); ++i) n += a.bits()[i] != b.bits()[i];
  return n;
}

const char* edge_name(Edge e) {
  switch (e) {
    case Edge::top: return "top";
    case Edge::bottom: return "bottom";
    case Edge::left: return "left";
    case Edge::right: return "right";
  }
  return "?";
}

Edge edge_from_name(const std::string& name) {
  for (Edge e : kAllEdges) {
    if (name == edge_name(e)) return e;
  }
  throw std::invalid_argument("unknown edge '" + name + "'");
}

int EdgeSet::size() const {
  return static_cast<int>(members().size());
}

std::vector<Edge> EdgeSet::members() const {
  std::vector<Edge> out;
  for (Edge e : kAllEdges) {
    if (contains(e)) out.push_back(e);
  }
  return out;
}

EdgeSet boundary_contacts(const BinaryMask& m) {
  EdgeSet edges;
  const int w = m.width();
  const int h = m.height();
  if (w == 0 || h == 0) return edges;
  for (int x = 0; x < w; ++x) {
    if (m.at(x, 0)) edges.insert(Edge::top);
    if (m.at(x, h - 1)) edges.insert(Edge::bottom);
  }
  for (int y = 0; y < h; ++y) {
    if (m.at(0, y)) edges.insert(Edge::left);
    if (m.at(w - 1, y)) edges.insert(Edge::right);
  }
  return edges;
}

BinaryMask edge_band(int width_px, Size dims, Edge e) {
  if (width_px < 1) throw std::invalid_argument("edge band width must be >= 1");
  if (width_px >= std::min(dims.width, dims.height)) {
    throw std::invalid_argument("edge band width " + std::to_string(width_px) +
                                " does not fit canvas " + to_string(dims));
  }
  BinaryMask out(dims);
  for (int y = 0; y < dims.height; ++y) {
    for (int x = 0; x < dims.width; ++x) {
      bool in = false;
      switch (e) {
        case Edge::top: in = y < width_px; break;
        case Edge::bottom: in = y >= dims.height - width_px; break;
        case Edge::left: in = x < width_px; break;
        case Edge::right: in = x >= dims.width - width_px; break;
      }
      if (in) out.set(x, y);
    }
  }
  return out;
}

MaskMetrics metrics(const BinaryMask& a, const BinaryMask& b) {
  require_same_size(a, b, "metrics");
  MaskMetrics r;
  long long uni = 0;
  for (std::size_t i = 0; i < a.bits().size(); ++i) {
    const bool x = a.bits()[i];
    const bool y = b.bits()[i];
    r.area_a += x;
    r.area_b += y;
    r.intersection += x && y;
    uni += x || y;
  }
  r.iou = uni == 0 ? 1.0 : static_cast<double>(r.intersection) / static_cast<double>(uni);
  return r;
}

BinaryMask translate(const BinaryMask& m, Offset offset, Size canvas) {
  BinaryMask out(canvas);
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y)) continue;
      const int nx = x + offset.dx;
      const int ny = y + offset.dy;
      if (out.in_bounds(nx, ny)) out.set(nx, ny);
    }
  }
  return out;
}

BoundingBox bounding_box(const BinaryMask& m) {
  BoundingBox b{m.width(), m.height(), 0, 0};
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y)) continue;
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x + 1);
      b.y1 = std::max(b.y1, y + 1);
    }
  }
  if (b.x1 == 0) return {};
  return b;
}

}  // namespace amodal
