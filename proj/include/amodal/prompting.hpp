#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "amodal/image.hpp"
#include "amodal/providers.hpp"

namespace amodal {

struct CandidateScore {
  std::string candidate;
  double score = 0.0;
  friend bool operator==(const CandidateScore&, const CandidateScore&) = default;
};

struct PromptSelection {
  std::string prompt;  // winning descriptor
  std::vector<CandidateScore> scores;
  Image swapped_target;
  friend bool operator==(const PromptSelection&, const PromptSelection&) = default;
};

// Tags in order, then the query unless it is already one of the tags.
std::vector<std::string> prompt_candidates(const TagSet& tags, const std::string& query);

// Highest score wins; ties go to the earliest candidate.
std::size_t argmax_earliest(const std::vector<CandidateScore>& scores);

PromptSelection select_prompt(const Image& img, const BinaryMask& visible, const TagSet& tags,
                              const std::string& query, const TextImageScorer& scorer,
                              const BackgroundFill& bkgd, int parallelism = 1);

nlohmann::json to_json(const PromptSelection& sel);

}  // namespace amodal
