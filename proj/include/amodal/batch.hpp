#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "amodal/completion.hpp"
#include "amodal/config.hpp"
#include "amodal/mock_providers.hpp"
#include "amodal/protocol.hpp"

namespace amodal {

class ManifestError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct BatchJob {
  std::string id;
  std::filesystem::path image;
  std::string query;
  std::string dataset = "default";
  std::optional<std::filesystem::path> mock_scene;
};

/// Jobs plus where their providers come from. Relative paths in the manifest
/// file resolve against the manifest's directory.
struct BatchManifest {
  std::vector<BatchJob> jobs;
  std::optional<ProviderEndpoint> endpoint;
  MockInpaint mock_inpainter = MockInpaint::oracle;
  PipelineConfig config;
};

BatchManifest parse_manifest(const nlohmann::json& j, const std::filesystem::path& base_dir);
BatchManifest load_manifest(const std::filesystem::path& path);

// Mock providers from a scene bundle, else the remote endpoint.
ProviderSet job_providers(const std::optional<std::filesystem::path>& mock_scene,
                          const std::optional<ProviderEndpoint>& endpoint,
                          const PipelineConfig& cfg, MockInpaint inpaint = MockInpaint::oracle);

struct JobOutcome {
  std::string id;
  std::string dataset;
  // completed | target_not_found | backend_unavailable | error
  std::string status;
  int iterations = 0;
  std::string termination;
  std::string error;
};

struct BatchSummary {
  std::vector<JobOutcome> jobs;  // sorted by id
  std::map<std::string, long long> counts;

  nlohmann::json to_json() const;
};

/// Runs every job on at most `workers` threads, writing out_dir/<id>/ run
/// directories and out_dir/summary.json. Per-job failures are recorded, not thrown.
BatchSummary run_batch(const BatchManifest& manifest, const std::filesystem::path& out_dir,
                       int workers, bool debug = false);

}  // namespace amodal
