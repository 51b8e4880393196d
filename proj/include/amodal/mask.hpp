#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace amodal {

// Thrown whenever two rasters that must share a canvas do not.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Size {
  int width = 0;
  int height = 0;

  long long pixels() const { return static_cast<long long>(width) * height; }
  friend bool operator==(const Size&, const Size&) = default;
};

std::string to_string(Size s);

struct Offset {
  int dx = 0;
  int dy = 0;
  friend bool operator==(const Offset&, const Offset&) = default;
};

/// Dense row-major binary raster. Used for visible, occluder and amodal
/// masks as well as object and background segments.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool value = false);
  explicit BinaryMask(Size size, bool value = false)
      : BinaryMask(size.width, size.height, value) {}

  static BinaryMask full(Size size) { return BinaryMask(size, true); }

  int width() const { return width_; }
  int height() const { return height_; }
  Size size() const { return {width_, height_}; }

  bool in_bounds(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool v = true) { bits_[index(x, y)] = v ? 1 : 0; }
  // Out-of-canvas reads return false.
  bool get_or_unset(int x, int y) const { return in_bounds(x, y) && at(x, y); }

  long long area() const;
  bool empty() const { return area() == 0; }

  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::vector<std::uint8_t>& bits() { return bits_; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

enum class BoolOp { union_, intersect, subtract };

BinaryMask boolean(BoolOp op, const BinaryMask& a, const BinaryMask& b);
inline BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
  return boolean(BoolOp::union_, a, b);
}
inline BinaryMask mask_intersect(const BinaryMask& a, const BinaryMask& b) {
  return boolean(BoolOp::intersect, a, b);
}
inline BinaryMask mask_subtract(const BinaryMask& a, const BinaryMask& b) {
  return boolean(BoolOp::subtract, a, b);
}
BinaryMask complement(const BinaryMask& m);
bool is_subset(const BinaryMask& inner, const BinaryMask& outer);
bool intersects(const BinaryMask& a, const BinaryMask& b);

void require_same_size(const BinaryMask& a, const BinaryMask& b, const char* what);

struct StructuringElement {
  enum class Shape { square, disk };

  Shape shape = Shape::square;
  int radius = 1;

  static StructuringElement square(int r) { return {Shape::square, r}; }
  static StructuringElement disk(int r) { return {Shape::disk, r}; }

  // (dx, dy) pairs covered by the element, row-major.
  std::vector<Offset> offsets() const;
};

// How erosion treats pixels that fall outside the canvas.
enum class Border { unset, set };

BinaryMask erode(const BinaryMask& m, StructuringElement se, Border border = Border::unset);
BinaryMask dilate(const BinaryMask& m, StructuringElement se);
// dilate then erode; the erosion treats the outside as set so the result is
// always a superset of m.
BinaryMask close(const BinaryMask& m, StructuringElement se);
// erode then dilate (outside unset); always a subset of m.
BinaryMask open(const BinaryMask& m, StructuringElement se);

enum class Connectivity { four, eight };

/// Maximal connected regions, largest first; equal areas ordered by the
/// row-major index of their first pixel.
std::vector<BinaryMask> connected_components(const BinaryMask& m,
                                             Connectivity c = Connectivity::eight);

long long l1_diff(const BinaryMask& a, const BinaryMask& b);

enum class Edge : std::uint8_t { top = 1, bottom = 2, left = 4, right = 8 };

const char* edge_name(Edge e);
Edge edge_from_name(const std::string& name);

class EdgeSet {
 public:
  EdgeSet() = default;
  EdgeSet(std::initializer_list<Edge> edges) {
    for (Edge e : edges) insert(e);
  }

  void insert(Edge e) { bits_ |= static_cast<std::uint8_t>(e); }
  bool contains(Edge e) const { return (bits_ & static_cast<std::uint8_t>(e)) != 0; }
  bool empty() const { return bits_ == 0; }
  int size() const;
  // top, bottom, left, right order.
  std::vector<Edge> members() const;

  friend bool operator==(const EdgeSet&, const EdgeSet&) = default;

 private:
  std::uint8_t bits_ = 0;
};

constexpr Edge kAllEdges[] = {Edge::top, Edge::bottom, Edge::left, Edge::right};

EdgeSet boundary_contacts(const BinaryMask& m);
BinaryMask edge_band(int width_px, Size dims, Edge e);

struct MaskMetrics {
  long long area_a = 0;
  long long area_b = 0;
  long long intersection = 0;
  double iou = 1.0;
};

MaskMetrics metrics(const BinaryMask& a, const BinaryMask& b);
inline double iou(const BinaryMask& a, const BinaryMask& b) { return metrics(a, b).iou; }

// Moves m onto a canvas of `canvas` size; pixels are shifted by `offset`
// and anything landing outside is dropped.
BinaryMask translate(const BinaryMask& m, Offset offset, Size canvas);

struct BoundingBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;  // exclusive
  int y1 = 0;  // exclusive
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
};

// Empty mask has no bounding box; callers check empty() first.
BoundingBox bounding_box(const BinaryMask& m);

}  // namespace amodal
