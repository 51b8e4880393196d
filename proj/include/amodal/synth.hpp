#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "amodal/image.hpp"
#include "amodal/mask.hpp"

namespace amodal::synth {

struct RectGeom {
  double x0, y0, x1, y1;  // half-open in pixel-center coordinates
};
struct EllipseGeom {
  double cx, cy, rx, ry;
};
struct TriangleGeom {
  std::array<double, 6> pts;  // x0 y0 x1 y1 x2 y2
};
using Geometry = std::variant<RectGeom, EllipseGeom, TriangleGeom>;

struct SolidFill {
  Rgb color;
};
struct CheckerFill {
  Rgb a;
  Rgb b;
  int cell = 8;
};
using Fill = std::variant<SolidFill, CheckerFill>;

struct Shape {
  std::string name;
  Geometry geometry;
  Fill fill;
  int z = 0;  // higher is nearer
  // Untagged shapes are invisible to the tagger and detector; they surface
  // only through background segmentation.
  bool tagged = true;

  const char* kind() const;
  // Scene coordinates; may lie outside the canvas.
  bool covers(int sx, int sy) const;
  Rgb color_at(int sx, int sy) const;
  std::vector<Rgb> colors() const;
};

struct SyntheticScene {
  Size canvas{256, 256};
  std::vector<Shape> shapes;
  Rgb background{230, 220, 200};
  std::uint64_t seed = 0;

  const Shape& shape(const std::string& name) const;
  const Shape* find(const std::string& name) const;
  // Shapes sorted by ascending z.
  std::vector<const Shape*> by_z() const;
};

class SceneError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GenerateSpec {
  Size canvas{256, 256};
  int min_shapes = 3;
  int max_shapes = 5;
  bool allow_boundary = false;
  // Radius used for the "occluders touch their target" construction check;
  // matches the default pipeline morphology radius.
  int adjacency_radius = 2;
  int max_attempts = 500;
};

SyntheticScene generate(std::uint64_t seed, const GenerateSpec& spec = {});

Image render(const SyntheticScene& scene);

// Index into scene.shapes of the topmost shape at each pixel; -1 is background.
std::vector<int> owner_map(const SyntheticScene& scene);

BinaryMask rasterize(const Shape& shape, Size canvas, Offset offset = {});
BinaryMask amodal_mask(const SyntheticScene& scene, const std::string& name);
BinaryMask visible_mask(const SyntheticScene& scene, const std::string& name);
// Amodal mask on an enlarged canvas whose origin sits at `offset` in it.
BinaryMask amodal_mask(const SyntheticScene& scene, const std::string& name, Size canvas,
                       Offset offset);

bool occlusion_truth(const SyntheticScene& scene, const std::string& target,
                     const std::string& candidate);

// The shape with the largest hidden area; nullopt when nothing is occluded.
std::optional<std::string> most_occluded(const SyntheticScene& scene);
// Edge the first shape crosses in a boundary scene, if any.
EdgeSet crossed_edges(const SyntheticScene& scene, const std::string& name);

nlohmann::json to_json(const SyntheticScene& scene);
SyntheticScene scene_from_json(const nlohmann::json& j);

// scene.json, rendered.png and per-shape amodal_<name>.png / visible_<name>.png.
void write_bundle(const SyntheticScene& scene, const std::filesystem::path& dir);
SyntheticScene load_bundle(const std::filesystem::path& dir);

}  // namespace amodal::synth
