#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "amodal/config.hpp"
#include "amodal/providers.hpp"
#include "amodal/scene_analysis.hpp"

namespace amodal {

struct OccluderSource {
  enum class Kind { object, background };
  Kind kind = Kind::object;
  std::string label;      // object label or background-N
  std::size_t index = 0;  // position in seg.objects or seg.background

  friend bool operator==(const OccluderSource&, const OccluderSource&) = default;
};

struct Occluder {
  OccluderSource source;
  BinaryMask mask;
  friend bool operator==(const Occluder&, const Occluder&) = default;
};

struct OcclusionReport {
  std::vector<Occluder> occluders;
  // Union of occluder masks minus the target's visible pixels, before
  // boundary expansion.
  BinaryMask occ_mask;
  EdgeSet boundary_edges;
  int queries_made = 0;
  int queries_skipped = 0;  // non-adjacent candidates
  int self_matches = 0;     // re-detections of the target

  friend bool operator==(const OcclusionReport&, const OcclusionReport&) = default;
};

/// Raised when an occlusion query fails; carries what was learned so far.
class OcclusionQueryError : public BackendUnavailable {
 public:
  OcclusionQueryError(const BackendUnavailable& cause, OcclusionReport partial)
      : BackendUnavailable(cause), partial_(std::move(partial)) {}
  const OcclusionReport& partial() const { return partial_; }

 private:
  OcclusionReport partial_;
};

OcclusionReport build_occluder_mask(const Image& img, const BinaryMask& visible,
                                    const SceneSegmentation& seg, const OcclusionOracle& oracle,
                                    const PipelineConfig& cfg);

struct BoundaryExpansion {
  BinaryMask occ;
  EdgeSet edges;
  int rounds = 0;
};

BoundaryExpansion expand_boundary(const BinaryMask& occ, const BinaryMask& visible,
                                  const PipelineConfig& cfg);

nlohmann::json to_json(const OcclusionReport& report);
void write_occlusion_dump(const OcclusionReport& report, const std::filesystem::path& dir);

}  // namespace amodal
