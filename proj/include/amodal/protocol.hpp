#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "json.hpp"

#include "amodal/providers.hpp"

namespace httplib {
class Server;
}

namespace amodal {

namespace wire {

inline constexpr const char* kGroundSegment = "/v1/ground_segment";
inline constexpr const char* kTags = "/v1/tags";
inline constexpr const char* kDetectSegments = "/v1/detect_segments";
inline constexpr const char* kOcclusionOrder = "/v1/occlusion_order";
inline constexpr const char* kScore = "/v1/score";
inline constexpr const char* kInpaint = "/v1/inpaint";

std::string image_b64(const Image& img);
std::string mask_b64(const BinaryMask& m);
// Throw std::invalid_argument (or PngError) on malformed payloads.
Image image_from_b64(const std::string& s);
BinaryMask mask_from_b64(const std::string& s);

// Field accessors that name the missing/mistyped field in their error.
const nlohmann::json& field(const nlohmann::json& j, const char* name);
std::string string_field(const nlohmann::json& j, const char* name);

}  // namespace wire

struct ProviderEndpoint {
  std::string base_url;  // e.g. http://127.0.0.1:8080
  double timeout_s = 30.0;
  int retries = 2;
  std::optional<std::string> auth_token;

  void validate() const;
};

/// All six roles over HTTP/JSON. Transport failures, non-2xx replies and
/// malformed bodies all surface as BackendUnavailable.
class RemoteProviders final : public Grounder,
                              public Tagger,
                              public SegmentDetector,
                              public OcclusionOracle,
                              public TextImageScorer,
                              public Inpainter {
 public:
  explicit RemoteProviders(ProviderEndpoint endpoint);

  std::optional<BinaryMask> ground_segment(const Image& img,
                                           const std::string& query) const override;
  TagSet tag_scene(const Image& img) const override;
  std::vector<LabeledMask> detect_segments(const Image& img, const TagSet& tags) const override;
  OcclusionRelation occlusion_order(const Image& img, const BinaryMask& target,
                                    const BinaryMask& candidate) const override;
  Score score_text_image(const Image& img, const std::string& text) const override;
  Image inpaint(const Image& img, const BinaryMask& region, const std::string& prompt,
                std::optional<std::uint64_t> seed) const override;

  // Raw POST with retries; exposed for conformance tests.
  nlohmann::json post(const std::string& route, const nlohmann::json& body) const;

 private:
  ProviderEndpoint endpoint_;
  std::string scheme_host_port_;
};

ProviderSet make_remote_providers(const ProviderEndpoint& endpoint);

/// Serves a ProviderSet over the wire protocol.
class ProviderServer {
 public:
  explicit ProviderServer(ProviderSet providers);
  ~ProviderServer();
  ProviderServer(const ProviderServer&) = delete;
  ProviderServer& operator=(const ProviderServer&) = delete;

  // Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Blocks until stop() is called from elsewhere.
  bool listen(const std::string& host, int port);
  void stop();

 private:
  void install_routes();

  ProviderSet providers_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace amodal
