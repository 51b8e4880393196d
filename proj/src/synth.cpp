#include "amodal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "amodal/png_io.hpp"

namespace amodal::synth {

namespace {

constexpr const char* kNames[] = {"apple", "bottle", "chair", "dog",  "cat",   "vase",
                                  "clock", "lamp",   "book",  "cup",  "kite",  "bus",
                                  "plate", "teapot", "shoe",  "drum", "guitar", "boat"};

// Every color is well away from the default clean-background gray so that
// background-difference thresholding can tell shapes from fill.
constexpr Rgb kPalette[] = {{220, 40, 40},  {40, 170, 60},   {40, 70, 210},  {235, 205, 40},
                            {160, 60, 200}, {30, 190, 190},  {240, 130, 30}, {25, 25, 25},
                            {250, 250, 250}, {140, 80, 30},  {250, 150, 190}, {0, 100, 0},
                            {120, 0, 40},   {90, 200, 120},  {60, 40, 120},  {200, 200, 90}};

constexpr Rgb kBackgrounds[] = {{230, 220, 200}, {60, 72, 90}, {196, 230, 214}};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  int uniform_int(int lo, int hi) {
    if (hi < lo) throw SceneError("empty sampling range; canvas too small for the generator settings");
    return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740992.0);
    return lo + u * (hi - lo);
  }
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(engine_() % i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

int floor_div(int a, int b) {
  int q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

double edge_fn(double ax, double ay, double bx, double by, double px, double py) {
  return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

struct Box {
  int x0, y0, w, h;
};

Geometry make_geometry(Rng& rng, const Box& b) {
  const int kind = rng.uniform_int(0, 2);
  const double x0 = b.x0, y0 = b.y0, x1 = b.x0 + b.w, y1 = b.y0 + b.h;
  if (kind == 0) return RectGeom{x0, y0, x1, y1};
  if (kind == 1) return EllipseGeom{(x0 + x1) / 2, (y0 + y1) / 2, b.w / 2.0, b.h / 2.0};
  const double t = rng.uniform(0.2, 0.8);
  switch (rng.uniform_int(0, 3)) {
    case 0: return TriangleGeom{{x0 + t * b.w, y0, x0, y1, x1, y1}};
    case 1: return TriangleGeom{{x0 + t * b.w, y1, x0, y0, x1, y0}};
    case 2: return TriangleGeom{{x0, y0 + t * b.h, x1, y0, x1, y1}};
    default: return TriangleGeom{{x1, y0 + t * b.h, x0, y0, x0, y1}};
  }
}

// Shape extents are tuned on a 256 px canvas and scale with it.
int scaled(int v, int dim) { return std::max(4, v * dim / 256); }

Box interior_box(Rng& rng, Size canvas) {
  constexpr int margin = 4;
  const int w = rng.uniform_int(scaled(56, canvas.width), scaled(120, canvas.width));
  const int h = rng.uniform_int(scaled(56, canvas.height), scaled(120, canvas.height));
  return {rng.uniform_int(margin, canvas.width - margin - w),
          rng.uniform_int(margin, canvas.height - margin - h), w, h};
}

Box crossing_box(Rng& rng, Size canvas, Edge e) {
  constexpr int margin = 4;
  const int w = rng.uniform_int(scaled(64, canvas.width), scaled(120, canvas.width));
  const int h = rng.uniform_int(scaled(64, canvas.height), scaled(120, canvas.height));
  Box b{rng.uniform_int(margin, canvas.width - margin - w),
        rng.uniform_int(margin, canvas.height - margin - h), w, h};
  switch (e) {
    case Edge::left: b.x0 = -rng.uniform_int(scaled(12, canvas.width), w / 3); break;
    case Edge::right: b.x0 = canvas.width - w + rng.uniform_int(scaled(12, canvas.width), w / 3); break;
    case Edge::top: b.y0 = -rng.uniform_int(scaled(12, canvas.height), h / 3); break;
    case Edge::bottom: b.y0 = canvas.height - h + rng.uniform_int(scaled(12, canvas.height), h / 3); break;
  }
  return b;
}

bool valid_scene(const SyntheticScene& scene, const GenerateSpec& spec,
                 std::optional<Edge> crossing) {
  const long long canvas_px = scene.canvas.pixels();
  const std::size_t n = scene.shapes.size();
  std::vector<BinaryMask> amodal, visible;
  for (const auto& s : scene.shapes) amodal.push_back(rasterize(s, scene.canvas));
  for (const auto& s : scene.shapes) visible.push_back(visible_mask(scene, s.name));

  for (std::size_t i = 0; i < n; ++i) {
    if (amodal[i].area() * 100 < 4 * canvas_px) return false;
    if (visible[i].area() * 100 < 2 * canvas_px) return false;
    const EdgeSet contacts = boundary_contacts(amodal[i]);
    if (crossing && i == 0) {
      if (contacts != EdgeSet{*crossing}) return false;
      if (boundary_contacts(visible[i]) != EdgeSet{*crossing}) return false;
    } else if (!contacts.empty()) {
      return false;
    }
  }

  bool overlap = false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) overlap = overlap || intersects(amodal[i], amodal[j]);
  }
  if (!overlap) return false;

  // Every true occluder must lie next to its target's visible region so
  // that adjacency-based query skipping never drops one.
  const auto se = StructuringElement::square(spec.adjacency_radius);
  std::vector<BinaryMask> grown;
  for (const auto& v : visible) grown.push_back(dilate(v, se));
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t c = 0; c < n; ++c) {
      if (t == c) continue;
      if (!occlusion_truth(scene, scene.shapes[t].name, scene.shapes[c].name)) continue;
      if (!intersects(grown[t], grown[c])) return false;
    }
  }
  return true;
}

nlohmann::json rgb_json(Rgb c) { return nlohmann::json::array({c[0], c[1], c[2]}); }
Rgb rgb_from(const nlohmann::json& j) {
  return {j.at(0).get<std::uint8_t>(), j.at(1).get<std::uint8_t>(), j.at(2).get<std::uint8_t>()};
}

}  // namespace

const char* Shape::kind() const {
  if (std::holds_alternative<RectGeom>(geometry)) return "rectangle";
  if (std::holds_alternative<EllipseGeom>(geometry)) return "ellipse";
  return "triangle";
}

bool Shape::covers(int sx, int sy) const {
  const double px = sx + 0.5;
  const double py = sy + 0.5;
  if (const auto* r = std::get_if<RectGeom>(&geometry)) {
    return px >= r->x0 && px < r->x1 && py >= r->y0 && py < r->y1;
  }
  if (const auto* e = std::get_if<EllipseGeom>(&geometry)) {
    const double dx = (px - e->cx) / e->rx;
    const double dy = (py - e->cy) / e->ry;
    return dx * dx + dy * dy <= 1.0;
  }
  const auto& p = std::get<TriangleGeom>(geometry).pts;
  const double a = edge_fn(p[0], p[1], p[2], p[3], px, py);
  const double b = edge_fn(p[2], p[3], p[4], p[5], px, py);
  const double c = edge_fn(p[4], p[5], p[0], p[1], px, py);
  return (a >= 0 && b >= 0 && c >= 0) || (a <= 0 && b <= 0 && c <= 0);
}

Rgb Shape::color_at(int sx, int sy) const {
  if (const auto* s = std::get_if<SolidFill>(&fill)) return s->color;
  const auto& c = std::get<CheckerFill>(fill);
  const int parity = (floor_div(sx, c.cell) + floor_div(sy, c.cell)) & 1;
  return parity ? c.b : c.a;
}

std::vector<Rgb> Shape::colors() const {
  if (const auto* s = std::get_if<SolidFill>(&fill)) return {s->color};
  const auto& c = std::get<CheckerFill>(fill);
  return {c.a, c.b};
}

const Shape* SyntheticScene::find(const std::string& name) const {
  for (const auto& s : shapes) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

const Shape& SyntheticScene::shape(const std::string& name) const {
  if (const auto* s = find(name)) return *s;
  throw SceneError("unknown shape '" + name + "'");
}

std::vector<const Shape*> SyntheticScene::by_z() const {
  std::vector<const Shape*> out;
  for (const auto& s : shapes) out.push_back(&s);
  std::stable_sort(out.begin(), out.end(),
                   [](const Shape* a, const Shape* b) { return a->z < b->z; });
  return out;
}

BinaryMask rasterize(const Shape& shape, Size canvas, Offset offset) {
  BinaryMask m(canvas);
  for (int y = 0; y < canvas.height; ++y) {
    for (int x = 0; x < canvas.width; ++x) {
      if (shape.covers(x - offset.dx, y - offset.dy)) m.set(x, y);
    }
  }
  return m;
}

std::vector<int> owner_map(const SyntheticScene& scene) {
  std::vector<int> owner(static_cast<std::size_t>(scene.canvas.pixels()), -1);
  std::vector<int> order(scene.shapes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scene.shapes[a].z < scene.shapes[b].z; });
  for (int idx : order) {
    const auto& s = scene.shapes[idx];
    for (int y = 0; y < scene.canvas.height; ++y) {
      for (int x = 0; x < scene.canvas.width; ++x) {
        if (s.covers(x, y)) owner[static_cast<std::size_t>(y) * scene.canvas.width + x] = idx;
      }
    }
  }
  return owner;
}

Image render(const SyntheticScene& scene) {
  Image img(scene.canvas, scene.background);
  for (const Shape* s : scene.by_z()) {
    for (int y = 0; y < scene.canvas.height; ++y) {
      for (int x = 0; x < scene.canvas.width; ++x) {
        if (s->covers(x, y)) img.set(x, y, s->color_at(x, y));
      }
    }
  }
  return img;
}

BinaryMask amodal_mask(const SyntheticScene& scene, const std::string& name) {
  return rasterize(scene.shape(name), scene.canvas);
}

BinaryMask amodal_mask(const SyntheticScene& scene, const std::string& name, Size canvas,
                       Offset offset) {
  return rasterize(scene.shape(name), canvas, offset);
}

BinaryMask visible_mask(const SyntheticScene& scene, const std::string& name) {
  const Shape& target = scene.shape(name);
  BinaryMask vis = rasterize(target, scene.canvas);
  for (const auto& s : scene.shapes) {
    if (s.z <= target.z || &s == &target) continue;
    vis = mask_subtract(vis, rasterize(s, scene.canvas));
  }
  return vis;
}

bool occlusion_truth(const SyntheticScene& scene, const std::string& target,
                     const std::string& candidate) {
  const Shape& t = scene.shape(target);
  const Shape& c = scene.shape(candidate);
  if (&t == &c) throw SceneError("occlusion_truth: target and candidate are the same shape");
  if (c.z <= t.z) return false;
  return intersects(rasterize(t, scene.canvas), rasterize(c, scene.canvas));
}

std::optional<std::string> most_occluded(const SyntheticScene& scene) {
  std::optional<std::string> best;
  long long best_hidden = 0;
  for (const auto& s : scene.shapes) {
    const long long hidden = amodal_mask(scene, s.name).area() - visible_mask(scene, s.name).area();
    if (hidden > best_hidden) {
      best_hidden = hidden;
      best = s.name;
    }
  }
  return best;
}

EdgeSet crossed_edges(const SyntheticScene& scene, const std::string& name) {
  return boundary_contacts(amodal_mask(scene, name));
}

SyntheticScene generate(std::uint64_t seed, const GenerateSpec& spec) {
  if (spec.min_shapes < 2 || spec.max_shapes < spec.min_shapes) {
    throw SceneError("generate: need at least two shapes");
  }
  if (spec.max_shapes > static_cast<int>(std::size(kNames))) {
    throw SceneError("generate: too many shapes requested");
  }
  Rng rng(seed);
  for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
    SyntheticScene scene;
    scene.canvas = spec.canvas;
    scene.seed = seed;
    scene.background = kBackgrounds[rng.uniform_int(0, std::size(kBackgrounds) - 1)];

    const int n = rng.uniform_int(spec.min_shapes, spec.max_shapes);
    std::vector<std::string> names(std::begin(kNames), std::end(kNames));
    rng.shuffle(names);
    std::vector<Rgb> palette(std::begin(kPalette), std::end(kPalette));
    rng.shuffle(palette);
    std::vector<int> zs(n);
    std::iota(zs.begin(), zs.end(), 0);
    rng.shuffle(zs);

    std::optional<Edge> crossing;
    if (spec.allow_boundary) crossing = kAllEdges[rng.uniform_int(0, 3)];

    std::size_t next_color = 0;
    for (int i = 0; i < n; ++i) {
      Shape s;
      s.name = names[i];
      s.z = zs[i];
      const Box box = (crossing && i == 0) ? crossing_box(rng, spec.canvas, *crossing)
                                           : interior_box(rng, spec.canvas);
      s.geometry = make_geometry(rng, box);
      if (rng.uniform_int(0, 9) < 3) {
        s.fill = CheckerFill{palette[next_color], palette[next_color + 1], rng.uniform_int(6, 14)};
        next_color += 2;
      } else {
        s.fill = SolidFill{palette[next_color]};
        next_color += 1;
      }
      scene.shapes.push_back(std::move(s));
    }
    if (valid_scene(scene, spec, crossing)) return scene;
  }
  throw SceneError("generate: no valid scene for seed " + std::to_string(seed) + " after " +
                   std::to_string(spec.max_attempts) + " attempts");
}

nlohmann::json to_json(const SyntheticScene& scene) {
  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& s : scene.shapes) {
    nlohmann::json js;
    js["name"] = s.name;
    js["kind"] = s.kind();
    if (const auto* r = std::get_if<RectGeom>(&s.geometry)) {
      js["params"] = {{"x0", r->x0}, {"y0", r->y0}, {"x1", r->x1}, {"y1", r->y1}};
    } else if (const auto* e = std::get_if<EllipseGeom>(&s.geometry)) {
      js["params"] = {{"cx", e->cx}, {"cy", e->cy}, {"rx", e->rx}, {"ry", e->ry}};
    } else {
      const auto& p = std::get<TriangleGeom>(s.geometry).pts;
      js["params"] = {{"points", {p[0], p[1], p[2], p[3], p[4], p[5]}}};
    }
    if (const auto* f = std::get_if<SolidFill>(&s.fill)) {
      js["fill"] = {{"type", "solid"}, {"color", rgb_json(f->color)}};
    } else {
      const auto& c = std::get<CheckerFill>(s.fill);
      js["fill"] = {{"type", "checker"},
                    {"colors", {rgb_json(c.a), rgb_json(c.b)}},
                    {"cell", c.cell}};
    }
    js["z"] = s.z;
    js["tagged"] = s.tagged;
    shapes.push_back(std::move(js));
  }
  return {{"canvas", {scene.canvas.width, scene.canvas.height}},
          {"seed", scene.seed},
          {"background", rgb_json(scene.background)},
          {"shapes", shapes}};
}

SyntheticScene scene_from_json(const nlohmann::json& j) {
  SyntheticScene scene;
  try {
    scene.canvas = {j.at("canvas").at(0).get<int>(), j.at("canvas").at(1).get<int>()};
    scene.seed = j.value("seed", std::uint64_t{0});
    scene.background = rgb_from(j.at("background"));
    for (const auto& js : j.at("shapes")) {
      Shape s;
      s.name = js.at("name").get<std::string>();
      const auto kind = js.at("kind").get<std::string>();
      const auto& p = js.at("params");
      if (kind == "rectangle") {
        s.geometry = RectGeom{p.at("x0"), p.at("y0"), p.at("x1"), p.at("y1")};
      } else if (kind == "ellipse") {
        s.geometry = EllipseGeom{p.at("cx"), p.at("cy"), p.at("rx"), p.at("ry")};
      } else if (kind == "triangle") {
        TriangleGeom t{};
        for (int i = 0; i < 6; ++i) t.pts[i] = p.at("points").at(i).get<double>();
        s.geometry = t;
      } else {
        throw SceneError("unknown shape kind '" + kind + "'");
      }
      const auto& f = js.at("fill");
      if (f.at("type") == "solid") {
        s.fill = SolidFill{rgb_from(f.at("color"))};
      } else {
        s.fill = CheckerFill{rgb_from(f.at("colors").at(0)), rgb_from(f.at("colors").at(1)),
                             f.at("cell").get<int>()};
      }
      s.z = js.at("z").get<int>();
      s.tagged = js.value("tagged", true);
      scene.shapes.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SceneError(std::string("malformed scene json: ") + e.what());
  }
  return scene;
}

void write_bundle(const SyntheticScene& scene, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "scene.json") << to_json(scene).dump(2) << "\n";
  save_png(dir / "rendered.png", render(scene));
  for (const auto& s : scene.shapes) {
    save_png(dir / ("amodal_" + s.name + ".png"), amodal_mask(scene, s.name));
    save_png(dir / ("visible_" + s.name + ".png"), visible_mask(scene, s.name));
  }
}

SyntheticScene load_bundle(const std::filesystem::path& dir) {
  const auto path = std::filesystem::is_directory(dir) ? dir / "scene.json" : dir;
  std::ifstream in(path);
  if (!in) throw SceneError("cannot open scene file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SceneError("malformed scene json in " + path.string() + ": " + e.what());
  }
  return scene_from_json(j);
}

}  // namespace amodal::synth
