#include "amodal/scene_analysis.hpp"

#include <cmath>
#include <fstream>
#include <future>

#include "amodal/png_io.hpp"

namespace amodal {

std::vector<BinaryMask> background_segments(Size canvas, const std::vector<BinaryMask>& objects,
                                            StructuringElement se, Connectivity connectivity,
                                            long long min_area) {
  BinaryMask covered(canvas);
  for (const auto& m : objects) covered = mask_union(covered, m);
  const BinaryMask leftover = open(complement(covered), se);
  std::vector<BinaryMask> out;
  for (auto& comp : connected_components(leftover, connectivity)) {
    if (comp.area() >= min_area) out.push_back(std::move(comp));
  }
  return out;
}

long long min_background_area(Size canvas, const PipelineConfig& cfg) {
  return static_cast<long long>(
      std::ceil(cfg.min_bg_area_frac * static_cast<double>(canvas.pixels())));
}

std::vector<BinaryMask> background_segments(const Image& img,
                                            const std::vector<BinaryMask>& objects,
                                            const PipelineConfig& cfg) {
  return background_segments(img.size(), objects, cfg.morph_element(), cfg.connectivity,
                             min_background_area(img.size(), cfg));
}

SceneAnalysis segment_scene(const Image& img, const ProviderSet& providers,
                            const std::string& query, const PipelineConfig& cfg) {
  if (query.empty()) throw PreconditionError("segment_scene: empty query");

  auto grounding = std::async(std::launch::async, [&] {
    return ground_segment(*providers.grounder, img, query);
  });
  SceneSegmentation seg;
  try {
    seg.tags = providers.tagger->tag_scene(img);
    seg.objects = providers.detector->detect_segments(img, seg.tags);
  } catch (...) {
    grounding.wait();
    throw;
  }
  auto visible = grounding.get();
  if (!visible) throw TargetNotFound(query);

  for (const auto& o : seg.objects) {
    if (o.mask.size() != img.size()) {
      throw BackendUnavailable("detect_segments", 0,
                               "segment '" + o.label + "' has dimensions " +
                                   to_string(o.mask.size()));
    }
  }

  // The target is always part of the claimed area, even if the detector
  // missed it.
  std::vector<BinaryMask> claimed;
  claimed.reserve(seg.objects.size() + 1);
  for (const auto& o : seg.objects) claimed.push_back(o.mask);
  claimed.push_back(*visible);
  seg.background = background_segments(img, claimed, cfg);

  return {std::move(*visible), std::move(seg)};
}

std::string background_label(std::size_t index) {
  return "background-" + std::to_string(index + 1);
}

void write_segmentation_dump(const SceneAnalysis& analysis, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json index;
  index["tags"] = analysis.seg.tags.tags();
  index["visible"] = "visible.png";
  save_png(dir / "visible.png", analysis.visible);
  index["objects"] = nlohmann::json::array();
  for (std::size_t i = 0; i < analysis.seg.objects.size(); ++i) {
    const std::string file = "object_" + std::to_string(i) + ".png";
    save_png(dir / file, analysis.seg.objects[i].mask);
    index["objects"].push_back({{"label", analysis.seg.objects[i].label}, {"file", file}});
  }
  index["background"] = nlohmann::json::array();
  for (std::size_t i = 0; i < analysis.seg.background.size(); ++i) {
    const std::string file = background_label(i) + ".png";
    save_png(dir / file, analysis.seg.background[i]);
    index["background"].push_back(file);
  }
  std::ofstream(dir / "index.json") << index.dump(2) << "\n";
}

}  // namespace amodal
