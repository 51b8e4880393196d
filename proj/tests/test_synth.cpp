#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "amodal/png_io.hpp"
#include "amodal/synth.hpp"
#include "test_util.hpp"

using namespace amodal;
using namespace amodal::synth;
using testutil::TempDir;

namespace {

SyntheticScene two_rect_scene() {
  SyntheticScene s;
  s.canvas = {40, 30};
  s.background = {10, 10, 10};
  s.shapes.push_back({"box", RectGeom{5, 5, 25, 20}, SolidFill{{200, 0, 0}}, 0, true});
  s.shapes.push_back({"lid", RectGeom{15, 10, 35, 25}, SolidFill{{0, 200, 0}}, 1, true});
  return s;
}

int overlapping_pairs(const SyntheticScene& s) {
  int n = 0;
  for (std::size_t i = 0; i < s.shapes.size(); ++i) {
    for (std::size_t j = i + 1; j < s.shapes.size(); ++j) {
      n += intersects(amodal_mask(s, s.shapes[i].name), amodal_mask(s, s.shapes[j].name));
    }
  }
  return n;
}

}  // namespace

TEST_CASE("generate is deterministic in the seed") {
  CHECK(to_json(generate(42)) == to_json(generate(42)));
  CHECK(to_json(generate(42)) != to_json(generate(43)));
}

TEST_CASE("generated scene invariants") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const SyntheticScene s = generate(seed);
    CHECK(s.shapes.size() >= 3);
    CHECK(s.shapes.size() <= 5);
    std::set<std::string> names;
    std::set<int> zs;
    for (const auto& sh : s.shapes) {
      names.insert(sh.name);
      zs.insert(sh.z);
      const BinaryMask a = amodal_mask(s, sh.name);
      CHECK(double(a.area()) >= 0.04 * double(s.canvas.pixels()));
      CHECK(boundary_contacts(a).empty());
    }
    CHECK(names.size() == s.shapes.size());
    CHECK(zs.size() == s.shapes.size());
    CHECK(overlapping_pairs(s) >= 1);
  }
}

TEST_CASE("two-shape scenes have exactly one overlapping pair") {
  GenerateSpec spec;
  spec.min_shapes = spec.max_shapes = 2;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const SyntheticScene s = generate(seed, spec);
    REQUIRE(s.shapes.size() == 2);
    CHECK(overlapping_pairs(s) == 1);
  }
}

TEST_CASE("boundary scenes cross exactly one edge") {
  GenerateSpec spec;
  spec.allow_boundary = true;
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const SyntheticScene s = generate(seed, spec);
    const std::string& name = s.shapes.front().name;
    const EdgeSet crossed = crossed_edges(s, name);
    CHECK(crossed.size() == 1);
    CHECK(boundary_contacts(visible_mask(s, name)) == crossed);
  }
}

TEST_CASE("render follows the painter's algorithm") {
  SyntheticScene empty;
  empty.canvas = {8, 8};
  CHECK(render(empty) == Image(empty.canvas, empty.background));

  const SyntheticScene s = two_rect_scene();
  const Image img = render(s);
  CHECK(img.at(0, 0) == Rgb{10, 10, 10});
  CHECK(img.at(6, 6) == Rgb{200, 0, 0});
  CHECK(img.at(20, 15) == Rgb{0, 200, 0});  // covered by both, lid is on top

  SyntheticScene one;
  one.canvas = {10, 10};
  one.shapes.push_back({"r", RectGeom{2, 2, 5, 6}, SolidFill{{1, 2, 3}}, 0, true});
  const Image r = render(one);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) {
      const bool in = x >= 2 && x < 5 && y >= 2 && y < 6;
      CHECK(r.at(x, y) == (in ? Rgb{1, 2, 3} : one.background));
    }
  }
}

TEST_CASE("amodal and visible masks") {
  const SyntheticScene s = two_rect_scene();
  CHECK(visible_mask(s, "lid") == amodal_mask(s, "lid"));
  CHECK(amodal_mask(s, "box").area() == 20 * 15);
  CHECK(visible_mask(s, "box") ==
        mask_subtract(amodal_mask(s, "box"), amodal_mask(s, "lid")));
  CHECK_THROWS_AS(amodal_mask(s, "nope"), SceneError);

  SyntheticScene hidden = s;
  hidden.shapes[1].geometry = RectGeom{0, 0, 40, 30};
  CHECK(visible_mask(hidden, "box").empty());
}

TEST_CASE("property: visible plus hidden part reassembles amodal") {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    const SyntheticScene s = generate(seed);
    for (const auto& sh : s.shapes) {
      BinaryMask higher(s.canvas);
      for (const auto& o : s.shapes) {
        if (o.z > sh.z) higher = mask_union(higher, amodal_mask(s, o.name));
      }
      const BinaryMask a = amodal_mask(s, sh.name);
      CHECK(mask_union(visible_mask(s, sh.name), mask_intersect(a, higher)) == a);
    }
  }
}

TEST_CASE("property: visible masks partition the non-background canvas") {
  for (std::uint64_t seed = 200; seed < 230; ++seed) {
    const SyntheticScene s = generate(seed);
    const auto owner = owner_map(s);
    const Image img = render(s);
    BinaryMask all(s.canvas);
    long long total = 0;
    for (const auto& sh : s.shapes) {
      const BinaryMask v = visible_mask(s, sh.name);
      all = mask_union(all, v);
      total += v.area();
      for (int y = 0; y < s.canvas.height; ++y) {
        for (int x = 0; x < s.canvas.width; ++x) {
          if (v.at(x, y)) CHECK(img.at(x, y) == sh.color_at(x, y));
        }
      }
    }
    CHECK(total == all.area());
    BinaryMask fg(s.canvas);
    for (int y = 0; y < s.canvas.height; ++y) {
      for (int x = 0; x < s.canvas.width; ++x) fg.set(x, y, owner[y * s.canvas.width + x] >= 0);
    }
    CHECK(all == fg);
  }
}

TEST_CASE("occlusion truth") {
  const SyntheticScene s = two_rect_scene();
  CHECK(occlusion_truth(s, "box", "lid"));
  CHECK_FALSE(occlusion_truth(s, "lid", "box"));
  SyntheticScene apart = s;
  apart.shapes[1].geometry = RectGeom{30, 0, 40, 5};
  CHECK_FALSE(occlusion_truth(apart, "box", "lid"));
  CHECK_THROWS(occlusion_truth(s, "box", "box"));
  CHECK_THROWS(occlusion_truth(s, "box", "ghost"));

  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const SyntheticScene g = generate(seed);
    for (const auto& a : g.shapes) {
      for (const auto& b : g.shapes) {
        if (a.name == b.name) continue;
        if (intersects(amodal_mask(g, a.name), amodal_mask(g, b.name))) {
          CHECK(occlusion_truth(g, a.name, b.name) != occlusion_truth(g, b.name, a.name));
        }
      }
    }
  }
}

TEST_CASE("checker fills reproduce from params") {
  SyntheticScene s;
  s.canvas = {16, 16};
  s.shapes.push_back({"c", RectGeom{0, 0, 16, 16}, CheckerFill{{0, 0, 0}, {255, 255, 255}, 4}, 0, true});
  const Image img = render(s);
  CHECK(img.at(0, 0) != img.at(4, 0));
  CHECK(img.at(0, 0) == img.at(4, 4));
  CHECK(img.at(1, 1) == img.at(3, 3));
}

TEST_CASE("json and bundle round trips") {
  const SyntheticScene s = generate(5, GenerateSpec{{128, 96}, 3, 5, true});
  CHECK(to_json(scene_from_json(to_json(s))) == to_json(s));

  TempDir dir("synth");
  write_bundle(s, dir.path());
  CHECK(std::filesystem::exists(dir / "scene.json"));
  CHECK(load_image(dir / "rendered.png") == render(s));
  for (const auto& sh : s.shapes) {
    CHECK(load_mask(dir / ("amodal_" + sh.name + ".png")) == amodal_mask(s, sh.name));
    CHECK(load_mask(dir / ("visible_" + sh.name + ".png")) == visible_mask(s, sh.name));
  }
  CHECK(to_json(load_bundle(dir.path())) == to_json(s));
}

TEST_CASE("most occluded and enlarged-canvas rasterization") {
  const SyntheticScene s = two_rect_scene();
  CHECK(most_occluded(s) == std::optional<std::string>("box"));
  const BinaryMask big = amodal_mask(s, "box", {50, 40}, {5, 5});
  CHECK(big == translate(amodal_mask(s, "box"), {5, 5}, {50, 40}));
}
