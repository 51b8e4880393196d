#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "amodal/config.hpp"
#include "amodal/providers.hpp"

namespace amodal {

struct SceneSegmentation {
  TagSet tags;
  std::vector<LabeledMask> objects;
  // Disjoint leftover regions, largest first.
  std::vector<BinaryMask> background;

  friend bool operator==(const SceneSegmentation&, const SceneSegmentation&) = default;
};

struct SceneAnalysis {
  BinaryMask visible;
  SceneSegmentation seg;
};

class TargetNotFound : public std::runtime_error {
 public:
  explicit TargetNotFound(const std::string& query)
      : std::runtime_error("query '" + query + "' could not be grounded"), query_(query) {}
  const std::string& query() const { return query_; }

 private:
  std::string query_;
};

/// Complement of the union of `objects`, opened with `se`, split into
/// connected components; components smaller than `min_area` are dropped.
std::vector<BinaryMask> background_segments(Size canvas, const std::vector<BinaryMask>& objects,
                                            StructuringElement se, Connectivity connectivity,
                                            long long min_area);
std::vector<BinaryMask> background_segments(const Image& img,
                                            const std::vector<BinaryMask>& objects,
                                            const PipelineConfig& cfg);

long long min_background_area(Size canvas, const PipelineConfig& cfg);

// Throws TargetNotFound when the grounder cannot place the query.
SceneAnalysis segment_scene(const Image& img, const ProviderSet& providers,
                            const std::string& query, const PipelineConfig& cfg);

std::string background_label(std::size_t index);

// One PNG per mask plus index.json.
void write_segmentation_dump(const SceneAnalysis& analysis, const std::filesystem::path& dir);

}  // namespace amodal
