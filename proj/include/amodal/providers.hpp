#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "amodal/image.hpp"
#include "amodal/mask.hpp"

namespace amodal {

/// A backend could not be reached or answered with something unusable.
/// Distinct from a NotFound grounding outcome.
class BackendUnavailable : public std::runtime_error {
 public:
  BackendUnavailable(std::string endpoint, std::size_t payload_bytes, const std::string& what)
      : std::runtime_error(endpoint + ": " + what + " (payload " +
                           std::to_string(payload_bytes) + " bytes)"),
        endpoint_(std::move(endpoint)),
        payload_bytes_(payload_bytes) {}

  const std::string& endpoint() const { return endpoint_; }
  std::size_t payload_bytes() const { return payload_bytes_; }

 private:
  std::string endpoint_;
  std::size_t payload_bytes_;
};

class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Ordered, lowercase, duplicate-free list of scene tags.
class TagSet {
 public:
  TagSet() = default;
  explicit TagSet(const std::vector<std::string>& raw);

  // Returns false when the (normalized) tag was already present.
  bool add(const std::string& tag);
  const std::vector<std::string>& tags() const { return tags_; }
  bool empty() const { return tags_.empty(); }
  std::size_t size() const { return tags_.size(); }
  bool contains(const std::string& tag) const;

  friend bool operator==(const TagSet&, const TagSet&) = default;

 private:
  std::vector<std::string> tags_;
};

struct LabeledMask {
  std::string label;
  BinaryMask mask;
  friend bool operator==(const LabeledMask&, const LabeledMask&) = default;
};

struct OcclusionRelation {
  bool occludes_target = false;
};

struct Score {
  double value = 0.0;
};

// One contract per model role.

class Grounder {
 public:
  virtual ~Grounder() = default;
  // nullopt when the query cannot be grounded in the image.
  virtual std::optional<BinaryMask> ground_segment(const Image& img,
                                                   const std::string& query) const = 0;
};

class Tagger {
 public:
  virtual ~Tagger() = default;
  virtual TagSet tag_scene(const Image& img) const = 0;
};

class SegmentDetector {
 public:
  virtual ~SegmentDetector() = default;
  virtual std::vector<LabeledMask> detect_segments(const Image& img, const TagSet& tags) const = 0;
};

class OcclusionOracle {
 public:
  virtual ~OcclusionOracle() = default;
  virtual OcclusionRelation occlusion_order(const Image& img, const BinaryMask& target,
                                            const BinaryMask& candidate) const = 0;
};

class TextImageScorer {
 public:
  virtual ~TextImageScorer() = default;
  virtual Score score_text_image(const Image& img, const std::string& text) const = 0;
};

class Inpainter {
 public:
  virtual ~Inpainter() = default;
  virtual Image inpaint(const Image& img, const BinaryMask& region, const std::string& prompt,
                        std::optional<std::uint64_t> seed) const = 0;
};

struct ProviderSet {
  std::shared_ptr<const Grounder> grounder;
  std::shared_ptr<const Tagger> tagger;
  std::shared_ptr<const SegmentDetector> detector;
  std::shared_ptr<const OcclusionOracle> occlusion;
  std::shared_ptr<const TextImageScorer> scorer;
  std::shared_ptr<const Inpainter> inpainter;

  bool complete() const {
    return grounder && tagger && detector && occlusion && scorer && inpainter;
  }
};

// Precondition-checking front doors used by the engine.
std::optional<BinaryMask> ground_segment(const Grounder& g, const Image& img,
                                         const std::string& query);
OcclusionRelation occlusion_order(const OcclusionOracle& o, const Image& img,
                                  const BinaryMask& target, const BinaryMask& candidate);
Score score_text_image(const TextImageScorer& s, const Image& img, const std::string& text);

/// Calls the inpainter and restores every pixel outside `region` from the
/// input, logging when the backend touched them.
Image checked_inpaint(const Inpainter& inpainter, const Image& img, const BinaryMask& region,
                      const std::string& prompt, std::optional<std::uint64_t> seed);

}  // namespace amodal
