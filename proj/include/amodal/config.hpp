#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "amodal/image.hpp"
#include "amodal/mask.hpp"

namespace amodal {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Every tunable of the completion pipeline.
struct PipelineConfig {
  // Termination threshold as a fraction of canvas pixels.
  double epsilon_frac = 0.001;
  int max_iterations = 3;

  int morph_radius = 2;     // background partitioning and refinement growth
  int boundary_radius = 8;  // boundary dilation and canvas padding
  int band_width = 8;
  int max_boundary_rounds = 4;
  int transition_width = 7;
  double min_bg_area_frac = 0.005;
  Connectivity connectivity = Connectivity::eight;

  BackgroundFill background;
  std::string background_image;  // path, informational when background is an image

  bool keep_expanded_canvas = true;
  double self_overlap_iou = 0.9;
  std::uint64_t inpaint_seed = 0;

  int amodal_tolerance = 12;
  // Re-segment inpainted output with the grounder instead of thresholding.
  bool amodal_resegment = false;
  bool skip_nonadjacent = true;
  int parallelism = 4;
  std::string prompt_template = "a complete photo of {}";

  void validate() const;

  long long epsilon_pixels(Size canvas) const;
  StructuringElement morph_element() const { return StructuringElement::square(morph_radius); }
  StructuringElement boundary_element() const {
    return StructuringElement::square(boundary_radius);
  }

  // Applies one `key = value` setting; unknown keys throw.
  void set(const std::string& key, const std::string& value);
  std::map<std::string, std::string> to_map() const;
};

// Flat key-value file, '#' starts a comment.
PipelineConfig load_config_file(const std::filesystem::path& path, PipelineConfig base = {});
void apply_config_text(PipelineConfig& cfg, const std::string& text);

nlohmann::json to_json(const PipelineConfig& cfg);

std::string format_prompt(const std::string& tmpl, const std::string& descriptor);

}  // namespace amodal
