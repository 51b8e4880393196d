#pragma once

#include <memory>
#include <optional>
#include <string>

#include "amodal/providers.hpp"
#include "amodal/synth.hpp"

namespace amodal {

/// Grounding, tagging, detection, occlusion ordering and scoring answered
/// from a synthetic scene's ground truth. Stateless; safe to share.
class SceneOracle final : public Grounder,
                          public Tagger,
                          public SegmentDetector,
                          public OcclusionOracle,
                          public TextImageScorer {
 public:
  explicit SceneOracle(synth::SyntheticScene scene);

  const synth::SyntheticScene& scene() const { return scene_; }

  std::optional<BinaryMask> ground_segment(const Image& img,
                                           const std::string& query) const override;
  TagSet tag_scene(const Image& img) const override;
  std::vector<LabeledMask> detect_segments(const Image& img, const TagSet& tags) const override;
  OcclusionRelation occlusion_order(const Image& img, const BinaryMask& target,
                                    const BinaryMask& candidate) const override;
  Score score_text_image(const Image& img, const std::string& text) const override;

  // Shape index owning most pixels of `m`; -1 for scene background (or an
  // empty mask / foreign canvas).
  int owner_of(const BinaryMask& m) const;
  // Shape whose fill colors dominate the image; -1 when none appears.
  int isolated_shape(const Image& img) const;

  static constexpr double kMatchScore = 1.0;
  static constexpr double kMismatchScore = 0.2;

 private:
  synth::SyntheticScene scene_;
  std::vector<int> owner_;
  std::vector<BinaryMask> visible_;
  std::vector<BinaryMask> amodal_;
};

/// Paints the prompted shape's ground-truth appearance inside the region and
/// the clean-background color everywhere else in it.
class OracleInpainter final : public Inpainter {
 public:
  OracleInpainter(synth::SyntheticScene scene, Rgb fill = BackgroundFill::kDefaultGray);

  Image inpaint(const Image& img, const BinaryMask& region, const std::string& prompt,
                std::optional<std::uint64_t> seed) const override;

  // Placement of the scene canvas inside a possibly padded working canvas.
  Offset infer_offset(const Image& img, const BinaryMask& region, int target) const;
  // Shape whose name occurs in the prompt as a whole word (longest wins).
  int target_from_prompt(const std::string& prompt) const;

 private:
  synth::SyntheticScene scene_;
  Image rendered_;
  std::vector<int> owner_;
  Rgb fill_;
};

/// Fills the region with seeded noise that never resembles the clean
/// background. Output is a pure function of (inputs, seed).
class NoisyInpainter final : public Inpainter {
 public:
  explicit NoisyInpainter(Rgb fill = BackgroundFill::kDefaultGray) : fill_(fill) {}

  Image inpaint(const Image& img, const BinaryMask& region, const std::string& prompt,
                std::optional<std::uint64_t> seed) const override;

 private:
  Rgb fill_;
};

enum class MockInpaint { oracle, noisy };

ProviderSet make_mock_providers(const synth::SyntheticScene& scene,
                                MockInpaint inpaint = MockInpaint::oracle,
                                Rgb fill = BackgroundFill::kDefaultGray);

}  // namespace amodal
