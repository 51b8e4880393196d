#include "amodal/providers.hpp"

#include <algorithm>
#include <cctype>
#include <iostream>
#include <mutex>

namespace amodal {

namespace {

std::string normalize_tag(const std::string& raw) {
  std::size_t b = 0;
  std::size_t e = raw.size();
  while (b < e && std::isspace(static_cast<unsigned char>(raw[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(raw[e - 1]))) --e;
  std::string out = raw.substr(b, e - b);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::mutex log_mutex;

}  // namespace

TagSet::TagSet(const std::vector<std::string>& raw) {
  for (const auto& t : raw) add(t);
}

bool TagSet::add(const std::string& tag) {
  auto norm = normalize_tag(tag);
  if (norm.empty() || contains(norm)) return false;
  tags_.push_back(std::move(norm));
  return true;
}

bool TagSet::contains(const std::string& tag) const {
  return std::find(tags_.begin(), tags_.end(), normalize_tag(tag)) != tags_.end();
}

std::optional<BinaryMask> ground_segment(const Grounder& g, const Image& img,
                                         const std::string& query) {
  if (query.empty()) throw PreconditionError("ground_segment: empty query");
  auto mask = g.ground_segment(img, query);
  if (mask && mask->size() != img.size()) {
    throw DimensionError("ground_segment: backend mask " + to_string(mask->size()) +
                         " does not match image " + to_string(img.size()));
  }
  if (mask && mask->empty()) return std::nullopt;
  return mask;
}

OcclusionRelation occlusion_order(const OcclusionOracle& o, const Image& img,
                                  const BinaryMask& target, const BinaryMask& candidate) {
  if (target.empty() || candidate.empty()) {
    throw PreconditionError("occlusion_order: masks must be non-empty");
  }
  return o.occlusion_order(img, target, candidate);
}

Score score_text_image(const TextImageScorer& s, const Image& img, const std::string& text) {
  if (text.empty()) throw PreconditionError("score_text_image: empty text");
  return s.score_text_image(img, text);
}

Image checked_inpaint(const Inpainter& inpainter, const Image& img, const BinaryMask& region,
                      const std::string& prompt, std::optional<std::uint64_t> seed) {
  if (region.empty()) throw PreconditionError("inpaint: empty region");
  if (region.size() != img.size()) {
    throw DimensionError("inpaint: region " + to_string(region.size()) + " vs image " +
                         to_string(img.size()));
  }
  Image out = inpainter.inpaint(img, region, prompt, seed);
  if (out.size() != img.size()) {
    throw BackendUnavailable("inpaint", out.data().size(),
                             "returned image of size " + to_string(out.size()) + ", expected " +
                                 to_string(img.size()));
  }
  long long touched = 0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (region.at(x, y)) continue;
      if (out.at(x, y) != img.at(x, y)) {
        ++touched;
        out.set(x, y, img.at(x, y));
      }
    }
  }
  if (touched > 0) {
    std::lock_guard lock(log_mutex);
    std::cerr << "warning: inpainter modified " << touched
              << " pixels outside the region; restored\n";
  }
  return out;
}

}  // namespace amodal
