#include "amodal/prompting.hpp"

#include <cmath>

#include "amodal/parallel.hpp"

namespace amodal {

std::vector<std::string> prompt_candidates(const TagSet& tags, const std::string& query) {
  std::vector<std::string> out = tags.tags();
  if (!tags.contains(query)) out.push_back(query);
  return out;
}

std::size_t argmax_earliest(const std::vector<CandidateScore>& scores) {
  if (scores.empty()) throw PreconditionError("argmax over no candidates");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i].score > scores[best].score) best = i;
  }
  return best;
}

PromptSelection select_prompt(const Image& img, const BinaryMask& visible, const TagSet& tags,
                              const std::string& query, const TextImageScorer& scorer,
                              const BackgroundFill& bkgd, int parallelism) {
  if (query.empty()) throw PreconditionError("select_prompt: empty query");
  if (visible.empty()) throw PreconditionError("select_prompt: empty visible mask");

  PromptSelection sel;
  sel.swapped_target = composite(img, visible, bkgd);
  const auto candidates = prompt_candidates(tags, query);
  sel.scores.resize(candidates.size());
  const auto errors = parallel_for(candidates.size(), parallelism, [&](std::size_t i) {
    const Score s = score_text_image(scorer, sel.swapped_target, candidates[i]);
    if (!std::isfinite(s.value)) {
      throw BackendUnavailable("score", 0, "non-finite score for '" + candidates[i] + "'");
    }
    sel.scores[i] = {candidates[i], s.value};
  });
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  sel.prompt = sel.scores[argmax_earliest(sel.scores)].candidate;
  return sel;
}

nlohmann::json to_json(const PromptSelection& sel) {
  nlohmann::json j;
  j["prompt"] = sel.prompt;
  j["scores"] = nlohmann::json::array();
  for (const auto& s : sel.scores) {
    j["scores"].push_back({{"candidate", s.candidate}, {"score", s.score}});
  }
  return j;
}

}  // namespace amodal
