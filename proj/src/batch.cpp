#include "amodal/batch.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>

#include "amodal/parallel.hpp"
#include "amodal/png_io.hpp"
#include "amodal/synth.hpp"

namespace amodal {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::string scalar_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return v.dump();
  throw ManifestError("config values must be scalars, got " + v.dump());
}

std::string required_string(const nlohmann::json& j, const char* key, std::size_t index) {
  if (!j.contains(key) || !j.at(key).is_string() || j.at(key).get<std::string>().empty()) {
    throw ManifestError("job " + std::to_string(index) + ": missing or empty '" + key + "'");
  }
  return j.at(key).get<std::string>();
}

}  // namespace

BatchManifest parse_manifest(const nlohmann::json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ManifestError("manifest must be a JSON object");
  BatchManifest m;

  if (j.contains("config")) {
    const auto& c = j.at("config");
    if (!c.is_object()) throw ManifestError("'config' must be an object");
    try {
      for (const auto& [k, v] : c.items()) {
        const std::string text = scalar_text(v);
        m.config.set(k, k == "background_image" ? resolve(base_dir, text).string() : text);
      }
      m.config.validate();
    } catch (const ConfigError& e) {
      throw ManifestError(std::string("config: ") + e.what());
    }
  }
  if (j.contains("endpoint")) {
    const auto& e = j.at("endpoint");
    ProviderEndpoint ep;
    if (e.is_string()) {
      ep.base_url = e.get<std::string>();
    } else if (e.is_object()) {
      ep.base_url = e.value("base_url", "");
      ep.timeout_s = e.value("timeout_s", ep.timeout_s);
      ep.retries = e.value("retries", ep.retries);
      if (e.contains("auth_token")) ep.auth_token = e.at("auth_token").get<std::string>();
    } else {
      throw ManifestError("'endpoint' must be a URL string or an object");
    }
    try {
      ep.validate();
    } catch (const std::invalid_argument& ex) {
      throw ManifestError(ex.what());
    }
    m.endpoint = ep;
  }
  if (j.contains("mock_inpainter")) {
    const std::string v = j.at("mock_inpainter").get<std::string>();
    if (v == "oracle") {
      m.mock_inpainter = MockInpaint::oracle;
    } else if (v == "noisy") {
      m.mock_inpainter = MockInpaint::noisy;
    } else {
      throw ManifestError("unknown mock_inpainter '" + v + "'");
    }
  }

  if (!j.contains("jobs") || !j.at("jobs").is_array()) throw ManifestError("'jobs' array missing");
  if (j.at("jobs").empty()) throw ManifestError("manifest has no jobs");
  std::set<std::string> ids;
  std::size_t index = 0;
  for (const auto& jj : j.at("jobs")) {
    if (!jj.is_object()) throw ManifestError("job " + std::to_string(index) + " is not an object");
    BatchJob job;
    job.id = required_string(jj, "id", index);
    if (job.id.find_first_of("/\\") != std::string::npos || job.id == "." || job.id == "..") {
      throw ManifestError("job id '" + job.id + "' is not a plain directory name");
    }
    if (!ids.insert(job.id).second) throw ManifestError("duplicate job id '" + job.id + "'");
    job.image = resolve(base_dir, required_string(jj, "image", index));
    job.query = required_string(jj, "query", index);
    if (jj.contains("dataset")) job.dataset = jj.at("dataset").get<std::string>();
    if (jj.contains("mock_scene")) {
      job.mock_scene = resolve(base_dir, jj.at("mock_scene").get<std::string>());
      if (!fs::is_directory(*job.mock_scene)) {
        throw ManifestError("job '" + job.id + "': mock scene not found: " +
                            job.mock_scene->string());
      }
    } else if (!m.endpoint) {
      throw ManifestError("job '" + job.id + "' has no mock_scene and the manifest no endpoint");
    }
    if (!fs::is_regular_file(job.image)) {
      throw ManifestError("job '" + job.id + "': image not found: " + job.image.string());
    }
    m.jobs.push_back(std::move(job));
    ++index;
  }
  return m;
}

BatchManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError(std::string("manifest is not valid JSON: ") + e.what());
  }
  try {
    return parse_manifest(j, path.parent_path());
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError(std::string("manifest: ") + e.what());
  }
}

ProviderSet job_providers(const std::optional<fs::path>& mock_scene,
                          const std::optional<ProviderEndpoint>& endpoint,
                          const PipelineConfig& cfg, MockInpaint inpaint) {
  if (mock_scene) {
    const Rgb fill =
        cfg.background.is_solid() ? cfg.background.solid_color() : BackgroundFill::kDefaultGray;
    return make_mock_providers(synth::load_bundle(*mock_scene), inpaint, fill);
  }
  if (endpoint) return make_remote_providers(*endpoint);
  throw std::invalid_argument("no provider source: give a mock scene or an endpoint");
}

nlohmann::json BatchSummary::to_json() const {
  nlohmann::json j;
  j["counts"] = counts;
  j["total"] = jobs.size();
  j["jobs"] = nlohmann::json::array();
  for (const auto& o : jobs) {
    nlohmann::json e{{"id", o.id}, {"dataset", o.dataset}, {"status", o.status}};
    if (o.status == "completed") {
      e["iterations"] = o.iterations;
      e["termination"] = o.termination;
    }
    if (!o.error.empty()) e["error"] = o.error;
    j["jobs"].push_back(e);
  }
  return j;
}

BatchSummary run_batch(const BatchManifest& manifest, const fs::path& out_dir, int workers,
                       bool debug) {
  fs::create_directories(out_dir);
  std::vector<JobOutcome> outcomes(manifest.jobs.size());

  const auto errors = parallel_for(manifest.jobs.size(), workers, [&](std::size_t i) {
    const BatchJob& job = manifest.jobs[i];
    JobOutcome& out = outcomes[i];
    out.id = job.id;
    out.dataset = job.dataset;
    try {
      const ProviderSet providers =
          job_providers(job.mock_scene, manifest.endpoint, manifest.config, manifest.mock_inpainter);
      const CompletionResult r =
          run_completion(load_image(job.image), job.query, providers, manifest.config);
      write_run(r, manifest.config, out_dir / job.id, debug);
      out.status = to_string(r.status);
      if (r.status == RunStatus::completed) {
        out.iterations = static_cast<int>(r.iterations.size());
        out.termination = to_string(r.termination);
      }
    } catch (const BackendUnavailable& e) {
      out.status = "backend_unavailable";
      out.error = e.what();
    } catch (const std::exception& e) {
      out.status = "error";
      out.error = e.what();
    }
  });
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i]) {
      outcomes[i].status = "error";
      outcomes[i].error = "unknown failure";
    }
  }

  BatchSummary s;
  s.jobs = std::move(outcomes);
  std::sort(s.jobs.begin(), s.jobs.end(),
            [](const JobOutcome& a, const JobOutcome& b) { return a.id < b.id; });
  for (const auto& o : s.jobs) ++s.counts[o.status];
  std::ofstream(out_dir / "summary.json") << s.to_json().dump(2) << "\n";
  return s;
}

}  // namespace amodal
