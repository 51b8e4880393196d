#include "amodal/mock_providers.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <map>
#include <random>

namespace amodal {

namespace {

std::string lower_trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out = s.substr(b, e - b);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || ch == '_' || ch == '-') {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::uint64_t fnv1a(std::uint64_t h, const std::uint8_t* p, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

SceneOracle::SceneOracle(synth::SyntheticScene scene)
    : scene_(std::move(scene)), owner_(synth::owner_map(scene_)) {
  for (const auto& s : scene_.shapes) {
    visible_.push_back(synth::visible_mask(scene_, s.name));
    amodal_.push_back(synth::amodal_mask(scene_, s.name));
  }
}

std::optional<BinaryMask> SceneOracle::ground_segment(const Image&,
                                                      const std::string& query) const {
  const auto q = lower_trim(query);
  for (std::size_t i = 0; i < scene_.shapes.size(); ++i) {
    if (scene_.shapes[i].name == q && !visible_[i].empty()) return visible_[i];
  }
  return std::nullopt;
}

TagSet SceneOracle::tag_scene(const Image&) const {
  TagSet tags;
  for (const auto* s : scene_.by_z()) {
    if (s->tagged) tags.add(s->name);
  }
  return tags;
}

std::vector<LabeledMask> SceneOracle::detect_segments(const Image&, const TagSet& tags) const {
  std::vector<LabeledMask> out;
  for (const auto* s : scene_.by_z()) {
    if (!s->tagged || !tags.contains(s->name)) continue;
    const auto idx = static_cast<std::size_t>(s - scene_.shapes.data());
    if (visible_[idx].empty()) continue;
    out.push_back({s->name, visible_[idx]});
  }
  return out;
}

int SceneOracle::owner_of(const BinaryMask& m) const {
  if (m.size() != scene_.canvas) return -1;
  std::map<int, long long> votes;
  for (std::size_t i = 0; i < m.bits().size(); ++i) {
    if (m.bits()[i]) ++votes[owner_[i]];
  }
  int best = -1;
  long long best_n = 0;
  for (const auto& [owner, n] : votes) {
    if (n > best_n) {
      best = owner;
      best_n = n;
    }
  }
  return best;
}

OcclusionRelation SceneOracle::occlusion_order(const Image&, const BinaryMask& target,
                                               const BinaryMask& candidate) const {
  const int t = owner_of(target);
  const int c = owner_of(candidate);
  if (t < 0 || c < 0 || t == c) return {false};
  const auto& ts = scene_.shapes[t];
  const auto& cs = scene_.shapes[c];
  return {cs.z > ts.z && intersects(amodal_[t], amodal_[c])};
}

int SceneOracle::isolated_shape(const Image& img) const {
  std::vector<long long> counts(scene_.shapes.size(), 0);
  std::vector<std::vector<Rgb>> colors;
  for (const auto& s : scene_.shapes) colors.push_back(s.colors());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const Rgb p = img.at(x, y);
      for (std::size_t i = 0; i < colors.size(); ++i) {
        if (std::find(colors[i].begin(), colors[i].end(), p) != colors[i].end()) ++counts[i];
      }
    }
  }
  int best = -1;
  long long best_n = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > best_n) {
      best = static_cast<int>(i);
      best_n = counts[i];
    }
  }
  return best;
}

Score SceneOracle::score_text_image(const Image& img, const std::string& text) const {
  const int s = isolated_shape(img);
  if (s >= 0 && lower_trim(text) == scene_.shapes[s].name) return {kMatchScore};
  return {kMismatchScore};
}

OracleInpainter::OracleInpainter(synth::SyntheticScene scene, Rgb fill)
    : scene_(std::move(scene)),
      rendered_(synth::render(scene_)),
      owner_(synth::owner_map(scene_)),
      fill_(fill) {}

int OracleInpainter::target_from_prompt(const std::string& prompt) const {
  int best = -1;
  for (const auto& w : words(prompt)) {
    for (std::size_t i = 0; i < scene_.shapes.size(); ++i) {
      if (scene_.shapes[i].name != w) continue;
      if (best < 0 || w.size() > scene_.shapes[best].name.size()) best = static_cast<int>(i);
    }
  }
  return best;
}

Offset OracleInpainter::infer_offset(const Image& img, const BinaryMask& region,
                                     int target) const {
  const int extra_x = img.width() - scene_.canvas.width;
  const int extra_y = img.height() - scene_.canvas.height;
  if (extra_x < 0 || extra_y < 0) return {};
  std::vector<Offset> candidates;
  for (int dy : {0, extra_y}) {
    for (int dx : {0, extra_x}) {
      const Offset o{dx, dy};
      if (std::find(candidates.begin(), candidates.end(), o) == candidates.end()) {
        candidates.push_back(o);
      }
    }
  }
  Offset best{};
  long long best_n = -1;
  for (const auto& o : candidates) {
    long long n = 0;
    for (int y = 0; y < scene_.canvas.height; ++y) {
      for (int x = 0; x < scene_.canvas.width; ++x) {
        const int owner = owner_[static_cast<std::size_t>(y) * scene_.canvas.width + x];
        if (owner < 0 || (target >= 0 && owner != target)) continue;
        if (region.at(x + o.dx, y + o.dy)) continue;
        if (img.at(x + o.dx, y + o.dy) == rendered_.at(x, y)) ++n;
      }
    }
    if (n > best_n) {
      best_n = n;
      best = o;
    }
  }
  return best;
}

Image OracleInpainter::inpaint(const Image& img, const BinaryMask& region,
                               const std::string& prompt, std::optional<std::uint64_t>) const {
  const int target = target_from_prompt(prompt);
  const Offset o = infer_offset(img, region, target);
  Image out = img;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (!region.at(x, y)) continue;
      const int sx = x - o.dx;
      const int sy = y - o.dy;
      if (target >= 0 && scene_.shapes[target].covers(sx, sy)) {
        out.set(x, y, scene_.shapes[target].color_at(sx, sy));
      } else {
        out.set(x, y, fill_);
      }
    }
  }
  return out;
}

Image NoisyInpainter::inpaint(const Image& img, const BinaryMask& region,
                              const std::string& prompt, std::optional<std::uint64_t> seed) const {
  std::uint64_t h = 1469598103934665603ULL;
  const std::uint64_t s = seed.value_or(0);
  h = fnv1a(h, reinterpret_cast<const std::uint8_t*>(&s), sizeof(s));
  h = fnv1a(h, img.data().data(), img.data().size());
  h = fnv1a(h, region.bits().data(), region.bits().size());
  h = fnv1a(h, reinterpret_cast<const std::uint8_t*>(prompt.data()), prompt.size());
  std::mt19937_64 rng(h);

  Image out = img;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (!region.at(x, y)) continue;
      const std::uint64_t r = rng();
      int c0 = static_cast<int>(r & 0xff);
      if (std::abs(c0 - fill_[0]) <= 24) c0 = (fill_[0] + 128) & 0xff;
      out.set(x, y, {static_cast<std::uint8_t>(c0), static_cast<std::uint8_t>((r >> 8) & 0xff),
                     static_cast<std::uint8_t>((r >> 16) & 0xff)});
    }
  }
  return out;
}

ProviderSet make_mock_providers(const synth::SyntheticScene& scene, MockInpaint inpaint,
                                Rgb fill) {
  auto oracle = std::make_shared<const SceneOracle>(scene);
  ProviderSet p;
  p.grounder = oracle;
  p.tagger = oracle;
  p.detector = oracle;
  p.occlusion = oracle;
  p.scorer = oracle;
  if (inpaint == MockInpaint::oracle) {
    p.inpainter = std::make_shared<const OracleInpainter>(scene, fill);
  } else {
    p.inpainter = std::make_shared<const NoisyInpainter>(fill);
  }
  return p;
}

}  // namespace amodal
