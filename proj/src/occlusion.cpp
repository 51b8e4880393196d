#include "amodal/occlusion.hpp"

#include <fstream>
#include <optional>

#include "amodal/parallel.hpp"
#include "amodal/png_io.hpp"

namespace amodal {

namespace {

struct Candidate {
  OccluderSource source;
  const BinaryMask* mask;
};

}  // namespace

OcclusionReport build_occluder_mask(const Image& img, const BinaryMask& visible,
                                    const SceneSegmentation& seg, const OcclusionOracle& oracle,
                                    const PipelineConfig& cfg) {
  if (visible.empty()) throw PreconditionError("build_occluder_mask: empty visible mask");
  if (visible.size() != img.size()) {
    throw DimensionError("build_occluder_mask: visible mask does not match image");
  }

  std::vector<Candidate> all;
  for (std::size_t i = 0; i < seg.objects.size(); ++i) {
    all.push_back({{OccluderSource::Kind::object, seg.objects[i].label, i}, &seg.objects[i].mask});
  }
  for (std::size_t i = 0; i < seg.background.size(); ++i) {
    all.push_back({{OccluderSource::Kind::background, background_label(i), i}, &seg.background[i]});
  }

  OcclusionReport report;
  report.occ_mask = BinaryMask(visible.size());
  const BinaryMask grown_target = dilate(visible, cfg.morph_element());

  std::vector<Candidate> queried;
  for (const auto& c : all) {
    require_same_size(*c.mask, visible, "build_occluder_mask");
    if (c.mask->empty()) continue;
    if (iou(*c.mask, visible) >= cfg.self_overlap_iou) {
      ++report.self_matches;
      continue;
    }
    if (cfg.skip_nonadjacent && !intersects(dilate(*c.mask, cfg.morph_element()), grown_target)) {
      ++report.queries_skipped;
      continue;
    }
    queried.push_back(c);
  }

  std::vector<std::optional<bool>> answers(queried.size());
  const auto errors = parallel_for(queried.size(), cfg.parallelism, [&](std::size_t i) {
    answers[i] = occlusion_order(oracle, img, visible, *queried[i].mask).occludes_target;
  });

  // Union is order-independent; walk candidates in input order so the
  // occluder list is deterministic.
  std::exception_ptr first_error;
  for (std::size_t i = 0; i < queried.size(); ++i) {
    if (errors[i]) {
      if (!first_error) first_error = errors[i];
      continue;
    }
    ++report.queries_made;
    if (!*answers[i]) continue;
    report.occluders.push_back({queried[i].source, *queried[i].mask});
    report.occ_mask = mask_union(report.occ_mask, *queried[i].mask);
  }
  report.occ_mask = mask_subtract(report.occ_mask, visible);

  if (first_error) {
    try {
      std::rethrow_exception(first_error);
    } catch (const BackendUnavailable& e) {
      throw OcclusionQueryError(e, std::move(report));
    }
  }
  return report;
}

BoundaryExpansion expand_boundary(const BinaryMask& occ, const BinaryMask& visible,
                                  const PipelineConfig& cfg) {
  require_same_size(occ, visible, "expand_boundary");
  BoundaryExpansion out{occ, boundary_contacts(visible), 0};
  if (out.edges.empty()) return out;

  const Size dims = visible.size();
  const int band = std::min(cfg.band_width, std::min(dims.width, dims.height) - 1);
  if (band < 1) return out;
  BinaryMask bands(dims);
  for (Edge e : out.edges.members()) bands = mask_union(bands, edge_band(band, dims, e));
  const BinaryMask grown = dilate(visible, cfg.boundary_element());

  while (out.rounds < cfg.max_boundary_rounds) {
    BinaryMask next = mask_union(out.occ, mask_intersect(grown, bands));
    ++out.rounds;
    const long long delta = l1_diff(next, out.occ);
    out.occ = std::move(next);
    if (delta == 0) break;
  }
  return out;
}

nlohmann::json to_json(const OcclusionReport& report) {
  nlohmann::json j;
  j["occluders"] = nlohmann::json::array();
  for (const auto& o : report.occluders) {
    j["occluders"].push_back(
        {{"source", o.source.kind == OccluderSource::Kind::object ? "object" : "background"},
         {"label", o.source.label},
         {"index", o.source.index},
         {"area", o.mask.area()}});
  }
  j["occ_area"] = report.occ_mask.area();
  j["boundary_edges"] = nlohmann::json::array();
  for (Edge e : report.boundary_edges.members()) j["boundary_edges"].push_back(edge_name(e));
  j["queries_made"] = report.queries_made;
  j["queries_skipped"] = report.queries_skipped;
  j["self_matches"] = report.self_matches;
  return j;
}

void write_occlusion_dump(const OcclusionReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_png(dir / "occ_mask.png", report.occ_mask);
  auto j = to_json(report);
  for (std::size_t i = 0; i < report.occluders.size(); ++i) {
    const std::string file = "occluder_" + std::to_string(i) + ".png";
    save_png(dir / file, report.occluders[i].mask);
    j["occluders"][i]["file"] = file;
  }
  std::ofstream(dir / "occlusion.json") << j.dump(2) << "\n";
}

}  // namespace amodal
