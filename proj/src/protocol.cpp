#include "amodal/protocol.hpp"

#include <httplib.h>

#include "amodal/png_io.hpp"

namespace amodal {

namespace wire {

std::string image_b64(const Image& img) { return base64_encode(encode_png(img)); }
std::string mask_b64(const BinaryMask& m) { return base64_encode(encode_png(m)); }
Image image_from_b64(const std::string& s) { return decode_rgb_png(base64_decode(s)); }
BinaryMask mask_from_b64(const std::string& s) { return decode_mask_png(base64_decode(s)); }

const nlohmann::json& field(const nlohmann::json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) {
    throw std::invalid_argument(std::string("missing field '") + name + "'");
  }
  return j.at(name);
}

std::string string_field(const nlohmann::json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_string()) throw std::invalid_argument(std::string("field '") + name + "' not a string");
  return v.get<std::string>();
}

}  // namespace wire

namespace {

struct SplitUrl {
  std::string scheme_host_port;
  std::string prefix;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto start = scheme == std::string::npos ? 0 : scheme + 3;
  const auto slash = url.find('/', start);
  if (slash == std::string::npos) return {url, ""};
  std::string prefix = url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, slash), prefix};
}

nlohmann::json error_body(const std::string& msg) { return {{"error", msg}}; }

}  // namespace

void ProviderEndpoint::validate() const {
  if (base_url.empty()) throw std::invalid_argument("endpoint base_url is empty");
  if (base_url.rfind("http://", 0) != 0) {
    throw std::invalid_argument("endpoint must be an http:// URL: " + base_url);
  }
  if (!(timeout_s > 0.0)) throw std::invalid_argument("endpoint timeout must be > 0");
  if (retries < 0) throw std::invalid_argument("endpoint retries must be >= 0");
}

RemoteProviders::RemoteProviders(ProviderEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  endpoint_.validate();
  scheme_host_port_ = split_url(endpoint_.base_url).scheme_host_port;
}

nlohmann::json RemoteProviders::post(const std::string& route, const nlohmann::json& body) const {
  const auto url = split_url(endpoint_.base_url);
  const std::string path = url.prefix + route;
  const std::string where = endpoint_.base_url + route;
  const std::string payload = body.dump();

  httplib::Client client(url.scheme_host_port);
  const auto secs = static_cast<time_t>(endpoint_.timeout_s);
  const auto usecs = static_cast<time_t>((endpoint_.timeout_s - double(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  if (endpoint_.auth_token) client.set_bearer_token_auth(*endpoint_.auth_token);

  std::string last_error = "no attempt made";
  std::size_t last_size = payload.size();
  for (int attempt = 0; attempt <= endpoint_.retries; ++attempt) {
    auto res = client.Post(path, payload, "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    last_size = res->body.size();
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      std::string msg = res->body;
      try {
        msg = nlohmann::json::parse(res->body).at("error").get<std::string>();
      } catch (const std::exception&) {
      }
      throw BackendUnavailable(where, last_size, "HTTP " + std::to_string(res->status) + ": " + msg);
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw BackendUnavailable(where, last_size, std::string("malformed response: ") + e.what());
    }
  }
  throw BackendUnavailable(where, last_size, last_error);
}

namespace {

// Runs a response decoder and maps any decoding problem to BackendUnavailable.
template <typename F>
auto decode_reply(const std::string& where, const nlohmann::json& reply, F&& f) {
  try {
    return f(reply);
  } catch (const BackendUnavailable&) {
    throw;
  } catch (const std::exception& e) {
    throw BackendUnavailable(where, reply.dump().size(), std::string("malformed response: ") + e.what());
  }
}

}  // namespace

std::optional<BinaryMask> RemoteProviders::ground_segment(const Image& img,
                                                          const std::string& query) const {
  const auto reply = post(wire::kGroundSegment, {{"image_png_b64", wire::image_b64(img)},
                                                 {"query", query}});
  return decode_reply(endpoint_.base_url + wire::kGroundSegment, reply,
                      [](const nlohmann::json& r) -> std::optional<BinaryMask> {
                        const auto& found = wire::field(r, "found");
                        if (!found.is_boolean()) throw std::invalid_argument("'found' not a bool");
                        if (!found.get<bool>()) return std::nullopt;
                        return wire::mask_from_b64(wire::string_field(r, "mask_png_b64"));
                      });
}

TagSet RemoteProviders::tag_scene(const Image& img) const {
  const auto reply = post(wire::kTags, {{"image_png_b64", wire::image_b64(img)}});
  return decode_reply(endpoint_.base_url + wire::kTags, reply, [](const nlohmann::json& r) {
    return TagSet(wire::field(r, "tags").get<std::vector<std::string>>());
  });
}

std::vector<LabeledMask> RemoteProviders::detect_segments(const Image& img,
                                                          const TagSet& tags) const {
  const auto reply = post(wire::kDetectSegments,
                          {{"image_png_b64", wire::image_b64(img)}, {"tags", tags.tags()}});
  return decode_reply(endpoint_.base_url + wire::kDetectSegments, reply,
                      [](const nlohmann::json& r) {
                        std::vector<LabeledMask> out;
                        const auto& segs = wire::field(r, "segments");
                        if (!segs.is_array()) throw std::invalid_argument("'segments' not an array");
                        for (const auto& s : segs) {
                          out.push_back({wire::string_field(s, "label"),
                                         wire::mask_from_b64(wire::string_field(s, "mask_png_b64"))});
                        }
                        return out;
                      });
}

OcclusionRelation RemoteProviders::occlusion_order(const Image& img, const BinaryMask& target,
                                                   const BinaryMask& candidate) const {
  const auto reply = post(wire::kOcclusionOrder, {{"image_png_b64", wire::image_b64(img)},
                                                  {"target_mask_png_b64", wire::mask_b64(target)},
                                                  {"candidate_mask_png_b64", wire::mask_b64(candidate)}});
  return decode_reply(endpoint_.base_url + wire::kOcclusionOrder, reply,
                      [](const nlohmann::json& r) {
                        const auto& v = wire::field(r, "occludes_target");
                        if (!v.is_boolean()) throw std::invalid_argument("'occludes_target' not a bool");
                        return OcclusionRelation{v.get<bool>()};
                      });
}

Score RemoteProviders::score_text_image(const Image& img, const std::string& text) const {
  const auto reply = post(wire::kScore, {{"image_png_b64", wire::image_b64(img)}, {"text", text}});
  return decode_reply(endpoint_.base_url + wire::kScore, reply, [](const nlohmann::json& r) {
    const auto& v = wire::field(r, "score");
    if (!v.is_number()) throw std::invalid_argument("'score' not a number");
    return Score{v.get<double>()};
  });
}

Image RemoteProviders::inpaint(const Image& img, const BinaryMask& region,
                               const std::string& prompt, std::optional<std::uint64_t> seed) const {
  nlohmann::json body{{"image_png_b64", wire::image_b64(img)},
                      {"mask_png_b64", wire::mask_b64(region)},
                      {"prompt", prompt}};
  if (seed) body["seed"] = *seed;
  const auto reply = post(wire::kInpaint, body);
  return decode_reply(endpoint_.base_url + wire::kInpaint, reply, [](const nlohmann::json& r) {
    return wire::image_from_b64(wire::string_field(r, "image_png_b64"));
  });
}

ProviderSet make_remote_providers(const ProviderEndpoint& endpoint) {
  auto remote = std::make_shared<const RemoteProviders>(endpoint);
  return {remote, remote, remote, remote, remote, remote};
}

ProviderServer::ProviderServer(ProviderSet providers)
    : providers_(std::move(providers)), server_(std::make_unique<httplib::Server>()) {
  if (!providers_.complete()) throw std::invalid_argument("ProviderServer: incomplete provider set");
  install_routes();
}

ProviderServer::~ProviderServer() { stop(); }

void ProviderServer::install_routes() {
  using Handler = std::function<nlohmann::json(const nlohmann::json&)>;
  const auto route = [this](const char* path, Handler h) {
    server_->Post(path, [h](const httplib::Request& req, httplib::Response& res) {
      nlohmann::json body;
      try {
        body = nlohmann::json::parse(req.body);
      } catch (const nlohmann::json::exception& e) {
        res.status = 400;
        res.set_content(error_body(std::string("malformed JSON: ") + e.what()).dump(),
                        "application/json");
        return;
      }
      try {
        res.set_content(h(body).dump(), "application/json");
      } catch (const BackendUnavailable& e) {
        res.status = 503;
        res.set_content(error_body(e.what()).dump(), "application/json");
      } catch (const std::invalid_argument& e) {
        res.status = 400;
        res.set_content(error_body(e.what()).dump(), "application/json");
      } catch (const nlohmann::json::exception& e) {
        res.status = 400;
        res.set_content(error_body(e.what()).dump(), "application/json");
      } catch (const PngError& e) {
        res.status = 400;
        res.set_content(error_body(e.what()).dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(error_body(e.what()).dump(), "application/json");
      }
    });
  };

  route(wire::kGroundSegment, [this](const nlohmann::json& b) {
    const Image img = wire::image_from_b64(wire::string_field(b, "image_png_b64"));
    const auto mask = ground_segment(*providers_.grounder, img, wire::string_field(b, "query"));
    if (!mask) return nlohmann::json{{"found", false}};
    return nlohmann::json{{"found", true}, {"mask_png_b64", wire::mask_b64(*mask)}};
  });
  route(wire::kTags, [this](const nlohmann::json& b) {
    const Image img = wire::image_from_b64(wire::string_field(b, "image_png_b64"));
    return nlohmann::json{{"tags", providers_.tagger->tag_scene(img).tags()}};
  });
  route(wire::kDetectSegments, [this](const nlohmann::json& b) {
    const Image img = wire::image_from_b64(wire::string_field(b, "image_png_b64"));
    const TagSet tags(wire::field(b, "tags").get<std::vector<std::string>>());
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& s : providers_.detector->detect_segments(img, tags)) {
      segs.push_back({{"label", s.label}, {"mask_png_b64", wire::mask_b64(s.mask)}});
    }
    return nlohmann::json{{"segments", segs}};
  });
  route(wire::kOcclusionOrder, [this](const nlohmann::json& b) {
    const Image img = wire::image_from_b64(wire::string_field(b, "image_png_b64"));
    const auto target = wire::mask_from_b64(wire::string_field(b, "target_mask_png_b64"));
    const auto candidate = wire::mask_from_b64(wire::string_field(b, "candidate_mask_png_b64"));
    const auto rel = occlusion_order(*providers_.occlusion, img, target, candidate);
    return nlohmann::json{{"occludes_target", rel.occludes_target}};
  });
  route(wire::kScore, [this](const nlohmann::json& b) {
    const Image img = wire::image_from_b64(wire::string_field(b, "image_png_b64"));
    const auto s = score_text_image(*providers_.scorer, img, wire::string_field(b, "text"));
    return nlohmann::json{{"score", s.value}};
  });
  route(wire::kInpaint, [this](const nlohmann::json& b) {
    const Image img = wire::image_from_b64(wire::string_field(b, "image_png_b64"));
    const auto region = wire::mask_from_b64(wire::string_field(b, "mask_png_b64"));
    std::optional<std::uint64_t> seed;
    if (b.contains("seed") && !b.at("seed").is_null()) seed = b.at("seed").get<std::uint64_t>();
    const Image out = checked_inpaint(*providers_.inpainter, img, region,
                                      wire::string_field(b, "prompt"), seed);
    return nlohmann::json{{"image_png_b64", wire::image_b64(out)}};
  });
}

int ProviderServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

bool ProviderServer::listen(const std::string& host, int port) {
  return server_->listen(host, port);
}

void ProviderServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace amodal
