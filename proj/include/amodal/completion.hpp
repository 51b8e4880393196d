#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "amodal/config.hpp"
#include "amodal/image.hpp"
#include "amodal/occlusion.hpp"
#include "amodal/prompting.hpp"
#include "amodal/providers.hpp"
#include "amodal/scene_analysis.hpp"

namespace amodal {

enum class Termination { stabilized, max_iterations };
enum class RunStatus { completed, target_not_found };

const char* to_string(Termination t);
const char* to_string(RunStatus s);

struct IterationTrace {
  int index = 0;
  BinaryMask occ_before;
  BinaryMask occ_after;
  long long l1_delta = 0;
  Image inpainted;
  BinaryMask amodal;
  friend bool operator==(const IterationTrace&, const IterationTrace&) = default;
};

struct CompletionResult {
  RunStatus status = RunStatus::target_not_found;
  std::string query;
  std::string prompt_text;
  RgbaImage rgba;
  BinaryMask amodal;
  // Grounded visible mask in output-canvas coordinates.
  BinaryMask visible;
  PromptSelection prompt;
  SceneSegmentation segmentation;
  OcclusionReport occlusion;
  EdgeSet boundary_edges;
  std::vector<IterationTrace> iterations;
  Termination termination = Termination::stabilized;
  // Position of the input image's origin in the output canvas.
  Offset canvas_offset;
  Size input_size;

  friend bool operator==(const CompletionResult&, const CompletionResult&) = default;
};

struct TerminationDecision {
  bool stop = false;
  Termination reason = Termination::stabilized;
};

struct StageTimings {
  std::map<std::string, double> ms;
};

Image init_target(const Image& img, const BinaryMask& visible, const PipelineConfig& cfg);

TerminationDecision should_terminate(const BinaryMask& prev_occ, const BinaryMask& next_occ,
                                     int t, const PipelineConfig& cfg);

/// Amodal mask of the inpainted target: pixels that differ from the clean
/// background, joined with `visible`, restricted to components touching
/// `visible`, then closed. Image backgrounds (or cfg.amodal_resegment)
/// re-ground `descriptor` on the inpainted image instead.
BinaryMask update_amodal(const Image& inpainted, const BinaryMask& visible,
                         const PipelineConfig& cfg, const BackgroundFill& canvas_fill,
                         const Grounder* grounder = nullptr, const std::string& descriptor = {});
BinaryMask update_amodal(const Image& inpainted, const BinaryMask& visible,
                         const PipelineConfig& cfg);

// Pixels newly claimed by the target, grown by the morphology element so the
// next pass can extend a shape that was cut off by the region border.
BinaryMask refine_occluder_mask(const BinaryMask& occ, const BinaryMask& amodal_before,
                                const BinaryMask& amodal_after, const BinaryMask& visible,
                                const PipelineConfig& cfg);

CompletionResult run_completion(const Image& img, const std::string& query,
                                const ProviderSet& providers, const PipelineConfig& cfg,
                                StageTimings* timings = nullptr);

nlohmann::json trace_json(const CompletionResult& result, const PipelineConfig& cfg);

// result.png, amodal.png and trace.json; per-iteration PNGs and stage dumps
// when `debug`. result.png is omitted for target_not_found.
void write_run(const CompletionResult& result, const PipelineConfig& cfg,
               const std::filesystem::path& dir, bool debug = false,
               const StageTimings* timings = nullptr);

}  // namespace amodal
