#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>

#include "amodal/config.hpp"
#include "amodal/png_io.hpp"
#include "test_util.hpp"

using namespace amodal;
using testutil::TempDir;

TEST_CASE("defaults") {
  const PipelineConfig cfg;
  CHECK(cfg.max_iterations == 3);
  CHECK(cfg.epsilon_frac == 0.001);
  CHECK(cfg.morph_radius == 2);
  CHECK(cfg.boundary_radius == 8);
  CHECK(cfg.band_width == 8);
  CHECK(cfg.max_boundary_rounds == 4);
  CHECK(cfg.transition_width == 7);
  CHECK(cfg.min_bg_area_frac == 0.005);
  CHECK(cfg.connectivity == Connectivity::eight);
  CHECK(cfg.background.solid_color() == Rgb{127, 127, 127});
  CHECK(cfg.keep_expanded_canvas);
  CHECK(cfg.self_overlap_iou == 0.9);
  CHECK(cfg.amodal_tolerance == 12);
  CHECK(cfg.prompt_template == "a complete photo of {}");
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("epsilon in pixels rounds up") {
  PipelineConfig cfg;
  CHECK(cfg.epsilon_pixels({256, 256}) == 66);  // ceil(65.536)
  CHECK(cfg.epsilon_pixels({100, 100}) == 10);
  CHECK(cfg.epsilon_pixels({10, 10}) == 1);
}

TEST_CASE("validation") {
  const auto invalid = [](auto mutate) {
    PipelineConfig cfg;
    mutate(cfg);
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  };
  invalid([](PipelineConfig& c) { c.epsilon_frac = 0.0; });
  invalid([](PipelineConfig& c) { c.epsilon_frac = 1.0; });
  invalid([](PipelineConfig& c) { c.max_iterations = 0; });
  invalid([](PipelineConfig& c) { c.morph_radius = 0; });
  invalid([](PipelineConfig& c) { c.boundary_radius = 0; });
  invalid([](PipelineConfig& c) { c.transition_width = 0; });
  invalid([](PipelineConfig& c) { c.parallelism = 0; });
}

TEST_CASE("key value text") {
  PipelineConfig cfg;
  apply_config_text(cfg,
                    "# comment\n"
                    "max_iterations = 5\n"
                    "\n"
                    "background = 10, 20, 30   \n"
                    "connectivity = four\n"
                    "keep_expanded_canvas = false\n"
                    "prompt_template = a photo of a {}, whole\n"
                    "inpaint_seed = 18446744073709551615\n");
  CHECK(cfg.max_iterations == 5);
  CHECK(cfg.background.solid_color() == Rgb{10, 20, 30});
  CHECK(cfg.connectivity == Connectivity::four);
  CHECK_FALSE(cfg.keep_expanded_canvas);
  CHECK(cfg.prompt_template == "a photo of a {}, whole");
  CHECK(cfg.inpaint_seed == 18446744073709551615ull);

  CHECK_THROWS_AS(apply_config_text(cfg, "bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(cfg, "max_iterations = three\n"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(cfg, "background = 1,2\n"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(cfg, "background = 1,2,300\n"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(cfg, "keep_expanded_canvas = maybe\n"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(cfg, "no equals sign\n"), ConfigError);
}

TEST_CASE("map round trip") {
  PipelineConfig a;
  a.epsilon_frac = 0.0123;
  a.morph_radius = 3;
  a.skip_nonadjacent = false;
  PipelineConfig b;
  for (const auto& [k, v] : a.to_map()) {
    if (k != "background_image") b.set(k, v);
  }
  CHECK(a.to_map() == b.to_map());
  CHECK(to_json(a).at("morph_radius") == "3");
}

TEST_CASE("config files and background images") {
  TempDir dir("config");
  write_file(dir / "bg.png", encode_png(Image(4, 4, {9, 9, 9})));
  std::ofstream(dir / "run.cfg") << "max_iterations = 2\nbackground_image = " << (dir / "bg.png").string()
                                 << "\n";
  const PipelineConfig cfg = load_config_file(dir / "run.cfg");
  CHECK(cfg.max_iterations == 2);
  CHECK_FALSE(cfg.background.is_solid());
  CHECK(cfg.background.image().at(0, 0) == Rgb{9, 9, 9});
  CHECK_THROWS_AS(load_config_file(dir / "missing.cfg"), ConfigError);

  PipelineConfig c;
  CHECK_THROWS_AS(c.set("background_image", (dir / "nope.png").string()), ConfigError);
}

TEST_CASE("prompt template") {
  CHECK(format_prompt("a complete photo of {}", "vase") == "a complete photo of vase");
  CHECK(format_prompt("{}", "vase") == "vase");
  CHECK(format_prompt("photo", "vase") == "photo vase");
}
