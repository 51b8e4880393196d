#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <fstream>

#include "amodal/mock_providers.hpp"
#include "amodal/occlusion.hpp"
#include "amodal/synth.hpp"
#include "reference.hpp"
#include "test_util.hpp"

using namespace amodal;
using namespace testutil;

namespace {

synth::SyntheticScene stacked() {
  synth::SyntheticScene s;
  s.canvas = {80, 80};
  s.shapes.push_back({"book", synth::RectGeom{20, 20, 50, 50}, synth::SolidFill{{200, 40, 40}}, 0, true});
  s.shapes.push_back({"mug", synth::RectGeom{40, 30, 60, 60}, synth::SolidFill{{40, 40, 200}}, 1, true});
  s.shapes.push_back({"pen", synth::RectGeom{5, 60, 15, 75}, synth::SolidFill{{40, 200, 40}}, 2, true});
  return s;
}

// Answers from a fixed set of occluding masks and counts calls.
class ListOracle final : public OcclusionOracle {
 public:
  explicit ListOracle(std::vector<BinaryMask> occluders) : occluders_(std::move(occluders)) {}
  OcclusionRelation occlusion_order(const Image&, const BinaryMask&,
                                    const BinaryMask& candidate) const override {
    ++calls;
    for (const auto& o : occluders_) {
      if (o == candidate) return {true};
    }
    return {false};
  }
  mutable std::atomic<int> calls{0};

 private:
  std::vector<BinaryMask> occluders_;
};

class FailingOracle final : public OcclusionOracle {
 public:
  OcclusionRelation occlusion_order(const Image&, const BinaryMask&,
                                    const BinaryMask&) const override {
    throw BackendUnavailable("http://backend/v1/occlusion_order", 0, "down");
  }
};

}  // namespace

TEST_CASE("one occluder above the target") {
  const auto scene = stacked();
  const auto p = make_mock_providers(scene);
  const Image img = synth::render(scene);
  const PipelineConfig cfg;
  const SceneAnalysis a = segment_scene(img, p, "book", cfg);
  const OcclusionReport r = build_occluder_mask(img, a.visible, a.seg, *p.occlusion, cfg);

  CHECK(r.occ_mask == mask_subtract(synth::visible_mask(scene, "mug"), a.visible));
  REQUIRE(r.occluders.size() == 1);
  CHECK(r.occluders[0].source.label == "mug");
  CHECK(r.self_matches == 1);
  CHECK(r.queries_skipped >= 1);  // the pen is far away
  CHECK(r.occ_mask == reference::exhaustive_occluder_mask(img, a.visible, a.seg, *p.occlusion, cfg));
}

TEST_CASE("no occluder and no boundary contact") {
  const auto scene = stacked();
  const auto p = make_mock_providers(scene);
  const Image img = synth::render(scene);
  const PipelineConfig cfg;
  const SceneAnalysis a = segment_scene(img, p, "mug", cfg);
  const OcclusionReport r = build_occluder_mask(img, a.visible, a.seg, *p.occlusion, cfg);
  CHECK(r.occ_mask.empty());
  CHECK(r.occluders.empty());
  const BoundaryExpansion e = expand_boundary(r.occ_mask, a.visible, cfg);
  CHECK(e.edges.empty());
  CHECK(e.occ.empty());
}

TEST_CASE("object and background occluders union by mask algebra") {
  const Size s{60, 60};
  const BinaryMask visible = rect_mask(s, 20, 20, 40, 40);
  const BinaryMask obj = rect_mask(s, 35, 25, 50, 45);   // overlaps visible
  const BinaryMask bg = rect_mask(s, 10, 38, 30, 55);    // overlaps visible
  const BinaryMask other = rect_mask(s, 0, 0, 18, 10);
  SceneSegmentation seg;
  seg.objects = {{"target", visible}, {"box", obj}, {"far", rect_mask(s, 50, 0, 60, 10)}};
  seg.background = {other, bg};
  ListOracle oracle({obj, bg});
  PipelineConfig cfg;
  const Image img(s);
  const OcclusionReport r = build_occluder_mask(img, visible, seg, oracle, cfg);
  CHECK(r.occ_mask == mask_subtract(mask_union(obj, bg), visible));
  CHECK_FALSE(intersects(r.occ_mask, visible));
  REQUIRE(r.occluders.size() == 2);
  CHECK(r.occluders[0].source.kind == OccluderSource::Kind::object);
  CHECK(r.occluders[1].source.kind == OccluderSource::Kind::background);
  CHECK(r.occluders[1].source.label == "background-2");
  CHECK(r.self_matches == 1);
  CHECK(r.queries_made + r.queries_skipped + r.self_matches == 5);
  CHECK(r.queries_made == oracle.calls.load());

  cfg.skip_nonadjacent = false;
  ListOracle all({obj, bg});
  const OcclusionReport full = build_occluder_mask(img, visible, seg, all, cfg);
  CHECK(full.occ_mask == r.occ_mask);
  CHECK(full.queries_skipped == 0);
  CHECK(all.calls.load() == 4);
}

TEST_CASE("parallelism does not change the report") {
  const auto scene = synth::generate(17);
  const auto p = make_mock_providers(scene);
  const Image img = synth::render(scene);
  PipelineConfig cfg;
  const std::string q = *synth::most_occluded(scene);
  const SceneAnalysis a = segment_scene(img, p, q, cfg);
  cfg.parallelism = 1;
  const auto serial = build_occluder_mask(img, a.visible, a.seg, *p.occlusion, cfg);
  cfg.parallelism = 8;
  CHECK(build_occluder_mask(img, a.visible, a.seg, *p.occlusion, cfg) == serial);
}

TEST_CASE("backend failure carries a partial report") {
  const Size s{30, 30};
  SceneSegmentation seg;
  seg.objects = {{"a", rect_mask(s, 10, 10, 20, 20)}};
  const BinaryMask visible = rect_mask(s, 5, 5, 12, 12);
  try {
    build_occluder_mask(Image(s), visible, seg, FailingOracle{}, PipelineConfig{});
    FAIL("expected OcclusionQueryError");
  } catch (const OcclusionQueryError& e) {
    CHECK(e.partial().queries_made == 0);
    CHECK(e.endpoint() == "http://backend/v1/occlusion_order");
  }
  CHECK_THROWS_AS(build_occluder_mask(Image(s), BinaryMask(s), seg, FailingOracle{}, PipelineConfig{}),
                  PreconditionError);
}

TEST_CASE("boundary expansion on the left edge") {
  const Size s{40, 30};
  const BinaryMask visible = rect_mask(s, 0, 10, 6, 20);
  PipelineConfig cfg;
  const BoundaryExpansion e = expand_boundary(BinaryMask(s), visible, cfg);
  CHECK(e.edges == EdgeSet{Edge::left});
  const BinaryMask band = edge_band(cfg.band_width, s, Edge::left);
  const BinaryMask grown = dilate(visible, cfg.boundary_element());
  CHECK_FALSE(e.occ.empty());
  CHECK(is_subset(e.occ, band));
  CHECK(is_subset(e.occ, grown));
  CHECK(e.occ == mask_intersect(grown, band));
  CHECK(e.rounds == 2);  // second round confirms the fixed point
}

TEST_CASE("boundary expansion with a full visible mask covers the border ring") {
  const Size s{20, 20};
  PipelineConfig cfg;
  const BoundaryExpansion e = expand_boundary(BinaryMask(s), BinaryMask::full(s), cfg);
  CHECK(e.edges.size() == 4);
  BinaryMask ring(s);
  for (Edge edge : kAllEdges) ring = mask_union(ring, edge_band(1, s, edge));
  CHECK(is_subset(ring, e.occ));
}

TEST_CASE("property: expansion is monotone and a fixed point off the edges") {
  std::mt19937_64 rng(41);
  PipelineConfig cfg;
  for (int i = 0; i < 50; ++i) {
    const BinaryMask occ = random_blobs(rng, 32, 32, 2);
    const BinaryMask visible = random_blobs(rng, 32, 32, 3);
    const BoundaryExpansion e = expand_boundary(occ, visible, cfg);
    CHECK(is_subset(occ, e.occ));
    CHECK(e.rounds <= cfg.max_boundary_rounds);
    if (boundary_contacts(visible).empty()) CHECK(e.occ == occ);
  }
}

TEST_CASE("report json and dump") {
  const auto scene = stacked();
  const auto p = make_mock_providers(scene);
  const Image img = synth::render(scene);
  const SceneAnalysis a = segment_scene(img, p, "book", PipelineConfig{});
  const auto r = build_occluder_mask(img, a.visible, a.seg, *p.occlusion, PipelineConfig{});
  const auto j = to_json(r);
  CHECK(j.at("occ_area") == r.occ_mask.area());
  CHECK(j.at("occluders").size() == 1);
  TempDir dir("occ");
  write_occlusion_dump(r, dir.path());
  CHECK(std::filesystem::exists(dir / "occ_mask.png"));
  CHECK(std::filesystem::exists(dir / "occluder_0.png"));
}
