#include "amodal/completion.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>

#include "amodal/png_io.hpp"

namespace amodal {

namespace {

using Clock = std::chrono::steady_clock;

class StageTimer {
 public:
  StageTimer(StageTimings* sink, std::string name)
      : sink_(sink), name_(std::move(name)), start_(Clock::now()) {}
  ~StageTimer() {
    if (!sink_) return;
    const auto d = std::chrono::duration<double, std::milli>(Clock::now() - start_).count();
    sink_->ms[name_] += d;
  }

 private:
  StageTimings* sink_;
  std::string name_;
  Clock::time_point start_;
};

BackgroundFill fill_for_canvas(const BackgroundFill& fill, Margins margins) {
  if (fill.is_solid()) return fill;
  return BackgroundFill::image(pad_canvas(fill.image(), margins, fill).image);
}

BinaryMask outside_original(Size canvas, Offset offset, Size original) {
  BinaryMask m(canvas, true);
  for (int y = 0; y < original.height; ++y) {
    for (int x = 0; x < original.width; ++x) m.set(x + offset.dx, y + offset.dy, false);
  }
  return m;
}

BinaryMask keep_touching(const BinaryMask& candidates, const BinaryMask& anchor,
                         Connectivity connectivity) {
  BinaryMask out(candidates.size());
  for (const auto& comp : connected_components(candidates, connectivity)) {
    if (intersects(comp, anchor)) out = mask_union(out, comp);
  }
  return out;
}

}  // namespace

const char* to_string(Termination t) {
  return t == Termination::stabilized ? "stabilized" : "max_iterations";
}

const char* to_string(RunStatus s) {
  return s == RunStatus::completed ? "completed" : "target_not_found";
}

Image init_target(const Image& img, const BinaryMask& visible, const PipelineConfig& cfg) {
  if (visible.empty()) throw PreconditionError("init_target: empty visible mask");
  return composite(img, visible, cfg.background);
}

TerminationDecision should_terminate(const BinaryMask& prev_occ, const BinaryMask& next_occ,
                                     int t, const PipelineConfig& cfg) {
  const long long delta = l1_diff(prev_occ, next_occ);
  if (delta < cfg.epsilon_pixels(prev_occ.size())) return {true, Termination::stabilized};
  if (t + 1 >= cfg.max_iterations) return {true, Termination::max_iterations};
  return {false, Termination::stabilized};
}

BinaryMask update_amodal(const Image& inpainted, const BinaryMask& visible,
                         const PipelineConfig& cfg, const BackgroundFill& canvas_fill,
                         const Grounder* grounder, const std::string& descriptor) {
  if (inpainted.size() != visible.size()) {
    throw DimensionError("update_amodal: image " + to_string(inpainted.size()) + " vs mask " +
                         to_string(visible.size()));
  }
  BinaryMask claimed(visible.size());
  if (canvas_fill.is_solid() && !cfg.amodal_resegment) {
    const Rgb bg = canvas_fill.solid_color();
    for (int y = 0; y < inpainted.height(); ++y) {
      for (int x = 0; x < inpainted.width(); ++x) {
        const Rgb p = inpainted.at(x, y);
        int dev = 0;
        for (int c = 0; c < 3; ++c) dev = std::max(dev, std::abs(int(p[c]) - int(bg[c])));
        if (dev > cfg.amodal_tolerance) claimed.set(x, y);
      }
    }
  } else {
    if (!grounder) {
      throw PreconditionError("update_amodal: re-segmentation requires a grounding provider");
    }
    if (auto m = ground_segment(*grounder, inpainted, descriptor)) claimed = *m;
  }
  claimed = mask_union(claimed, visible);
  const BinaryMask kept = keep_touching(claimed, visible, cfg.connectivity);
  return close(kept, StructuringElement::square(1));
}

BinaryMask update_amodal(const Image& inpainted, const BinaryMask& visible,
                         const PipelineConfig& cfg) {
  return update_amodal(inpainted, visible, cfg, cfg.background);
}

BinaryMask refine_occluder_mask(const BinaryMask& occ, const BinaryMask& amodal_before,
                                const BinaryMask& amodal_after, const BinaryMask& visible,
                                const PipelineConfig& cfg) {
  const BinaryMask fresh = mask_subtract(amodal_after, amodal_before);
  if (fresh.empty()) return occ;
  const BinaryMask grown = mask_subtract(dilate(fresh, cfg.morph_element()), visible);
  return mask_union(occ, grown);
}

CompletionResult run_completion(const Image& img, const std::string& query,
                                const ProviderSet& providers, const PipelineConfig& cfg,
                                StageTimings* timings) {
  if (query.empty()) throw PreconditionError("run_completion: empty query");
  if (!providers.complete()) throw PreconditionError("run_completion: provider set incomplete");
  cfg.validate();

  CompletionResult result;
  result.query = query;
  result.input_size = img.size();

  SceneAnalysis analysis;
  try {
    StageTimer timer(timings, "segment_scene");
    analysis = segment_scene(img, providers, query, cfg);
  } catch (const TargetNotFound&) {
    result.status = RunStatus::target_not_found;
    return result;
  }
  result.segmentation = analysis.seg;

  {
    StageTimer timer(timings, "occlusion");
    result.occlusion =
        build_occluder_mask(img, analysis.visible, analysis.seg, *providers.occlusion, cfg);
  }
  BoundaryExpansion expansion = expand_boundary(result.occlusion.occ_mask, analysis.visible, cfg);
  result.occlusion.boundary_edges = expansion.edges;
  result.boundary_edges = expansion.edges;

  {
    StageTimer timer(timings, "prompt");
    result.prompt = select_prompt(img, analysis.visible, analysis.seg.tags, query,
                                  *providers.scorer, cfg.background, cfg.parallelism);
  }
  result.prompt_text = format_prompt(cfg.prompt_template, result.prompt.prompt);

  // Work on a canvas padded along every edge the target touches.
  const Margins margins = margins_for_edges(expansion.edges, cfg.boundary_radius);
  const PaddedImage padded = pad_canvas(img, margins, cfg.background);
  const Size canvas = padded.image.size();
  const Offset offset = padded.offset;
  const BackgroundFill canvas_fill = fill_for_canvas(cfg.background, margins);

  const BinaryMask visible = translate(analysis.visible, offset, canvas);
  BinaryMask occ = translate(expansion.occ, offset, canvas);
  if (!expansion.edges.empty()) {
    const BinaryMask reach = dilate(mask_union(visible, occ), cfg.boundary_element());
    occ = mask_union(occ, mask_intersect(reach, outside_original(canvas, offset, img.size())));
  }
  // The edge bands overlap the target itself; only hidden pixels are inpainted.
  occ = mask_subtract(occ, visible);

  Image current = composite(padded.image, visible, canvas_fill);
  BinaryMask amodal = visible;
  result.termination = Termination::stabilized;

  if (!occ.empty()) {
    StageTimer timer(timings, "inpaint_loop");
    for (int t = 0;; ++t) {
      IterationTrace it;
      it.index = t;
      it.occ_before = occ;
      it.inpainted = checked_inpaint(*providers.inpainter, current, occ, result.prompt_text,
                                     cfg.inpaint_seed + static_cast<std::uint64_t>(t));
      it.amodal = update_amodal(it.inpainted, visible, cfg, canvas_fill,
                                providers.grounder.get(), result.prompt.prompt);
      it.occ_after = refine_occluder_mask(occ, amodal, it.amodal, visible, cfg);
      it.l1_delta = l1_diff(it.occ_before, it.occ_after);
      const TerminationDecision decision = should_terminate(it.occ_before, it.occ_after, t, cfg);

      current = it.inpainted;
      amodal = it.amodal;
      occ = it.occ_after;
      result.iterations.push_back(std::move(it));
      if (decision.stop) {
        result.termination = decision.reason;
        break;
      }
    }
  }

  // Original content dominates the deep interior of the visible region and
  // fades out across the transition band.
  const AlphaMap alpha = alpha_transition(visible, cfg.transition_width);
  const Image blend = alpha_blend(padded.image, current, alpha);
  result.rgba = assemble_rgba(blend, amodal);
  result.amodal = amodal;
  result.visible = visible;
  result.canvas_offset = offset;

  if (!cfg.keep_expanded_canvas && canvas != img.size()) {
    const BoundingBox box{offset.dx, offset.dy, offset.dx + img.width(),
                          offset.dy + img.height()};
    result.rgba = crop(result.rgba, box);
    result.amodal = crop(result.amodal, box);
    result.visible = crop(result.visible, box);
    result.canvas_offset = {};
  }
  result.status = RunStatus::completed;
  return result;
}

nlohmann::json trace_json(const CompletionResult& result, const PipelineConfig& cfg) {
  nlohmann::json j;
  j["query"] = result.query;
  j["status"] = to_string(result.status);
  j["config"] = to_json(cfg);
  j["input_size"] = {result.input_size.width, result.input_size.height};
  if (result.status != RunStatus::completed) return j;

  j["output_size"] = {result.rgba.width(), result.rgba.height()};
  j["canvas_offset"] = {result.canvas_offset.dx, result.canvas_offset.dy};
  j["tags"] = result.segmentation.tags.tags();
  j["objects"] = nlohmann::json::array();
  for (const auto& o : result.segmentation.objects) {
    j["objects"].push_back({{"label", o.label}, {"area", o.mask.area()}});
  }
  j["background_segments"] = nlohmann::json::array();
  for (const auto& b : result.segmentation.background) j["background_segments"].push_back(b.area());
  j["occlusion"] = to_json(result.occlusion);
  j["prompt_selection"] = to_json(result.prompt);
  j["prompt_text"] = result.prompt_text;
  j["iterations"] = nlohmann::json::array();
  for (const auto& it : result.iterations) {
    j["iterations"].push_back({{"index", it.index},
                               {"l1_delta", it.l1_delta},
                               {"occ_area_before", it.occ_before.area()},
                               {"occ_area_after", it.occ_after.area()},
                               {"amodal_area", it.amodal.area()}});
  }
  j["termination"] = to_string(result.termination);
  j["amodal_area"] = result.amodal.area();
  return j;
}

void write_run(const CompletionResult& result, const PipelineConfig& cfg,
               const std::filesystem::path& dir, bool debug, const StageTimings* timings) {
  std::filesystem::create_directories(dir);
  if (result.status == RunStatus::completed) {
    save_png(dir / "result.png", result.rgba);
    save_png(dir / "amodal.png", result.amodal);
  }
  std::ofstream(dir / "trace.json") << trace_json(result, cfg).dump(2) << "\n";
  if (timings) {
    nlohmann::json t = nlohmann::json::object();
    for (const auto& [k, v] : timings->ms) t[k] = v;
    std::ofstream(dir / "timings.json") << t.dump(2) << "\n";
  }
  if (!debug || result.status != RunStatus::completed) return;

  const auto dbg = dir / "debug";
  std::filesystem::create_directories(dbg);
  save_png(dbg / "swapped_target.png", result.prompt.swapped_target);
  save_png(dbg / "visible.png", result.visible);
  write_occlusion_dump(result.occlusion, dbg / "occlusion");
  write_segmentation_dump({result.visible, result.segmentation}, dbg / "segmentation");
  for (const auto& it : result.iterations) {
    const std::string p = "iter_" + std::to_string(it.index) + "_";
    save_png(dbg / (p + "inpainted.png"), it.inpainted);
    save_png(dbg / (p + "occ_before.png"), it.occ_before);
    save_png(dbg / (p + "occ_after.png"), it.occ_after);
    save_png(dbg / (p + "amodal.png"), it.amodal);
  }
}

}  // namespace amodal
