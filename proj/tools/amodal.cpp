// amodal: command-line front end for the completion engine.

#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "amodal/batch.hpp"
#include "amodal/completion.hpp"
#include "amodal/eval.hpp"
#include "amodal/mock_providers.hpp"
#include "amodal/png_io.hpp"
#include "amodal/protocol.hpp"
#include "amodal/synth.hpp"

namespace fs = std::filesystem;
using namespace amodal;

namespace {

constexpr int kOk = 0;
constexpr int kBackend = 1;
constexpr int kUsage = 2;
constexpr int kNotFound = 3;

int fail(int code, const std::string& msg) {
  std::cerr << "amodal: " << msg << "\n";
  return code;
}

MockInpaint parse_inpainter(const std::string& name) {
  if (name == "oracle") return MockInpaint::oracle;
  if (name == "noisy") return MockInpaint::noisy;
  throw std::invalid_argument("unknown inpainter '" + name + "' (oracle|noisy)");
}

struct CompleteOpts {
  std::string image, query, out, config, endpoint, mock_scene, inpainter = "oracle";
  std::optional<std::uint64_t> seed;
  double timeout_s = 30.0;
  int retries = 2;
  bool debug = false;
};

int cmd_complete(const CompleteOpts& o) {
  PipelineConfig cfg;
  Image img;
  ProviderSet providers;
  try {
    if (!o.config.empty()) cfg = load_config_file(o.config);
    if (o.seed) cfg.inpaint_seed = *o.seed;
    cfg.validate();
    img = load_image(o.image);
    if (o.endpoint.empty() == o.mock_scene.empty()) {
      throw std::invalid_argument("give exactly one of --endpoint or --mock-scene");
    }
    std::optional<ProviderEndpoint> ep;
    std::optional<fs::path> scene;
    if (!o.endpoint.empty()) {
      ep = ProviderEndpoint{o.endpoint, o.timeout_s, o.retries, std::nullopt};
      if (const char* tok = std::getenv("AMODAL_AUTH_TOKEN")) ep->auth_token = tok;
    } else {
      scene = o.mock_scene;
    }
    providers = job_providers(scene, ep, cfg, parse_inpainter(o.inpainter));
  } catch (const std::exception& e) {
    return fail(kUsage, e.what());
  }

  try {
    StageTimings timings;
    const CompletionResult r = run_completion(img, o.query, providers, cfg, &timings);
    write_run(r, cfg, o.out, o.debug, &timings);
    if (r.status == RunStatus::target_not_found) {
      return fail(kNotFound, "target '" + o.query + "' not found in " + o.image);
    }
    std::cout << "completed: " << r.iterations.size() << " iteration(s), "
              << to_string(r.termination) << ", amodal area " << r.amodal.area() << "\n";
    return kOk;
  } catch (const BackendUnavailable& e) {
    return fail(kBackend, std::string("backend unavailable: ") + e.what());
  } catch (const std::exception& e) {
    return fail(kBackend, e.what());
  }
}

int cmd_batch(const std::string& manifest_path, const std::string& out_dir, int workers,
              bool debug) {
  BatchManifest m;
  try {
    m = load_manifest(manifest_path);
  } catch (const std::exception& e) {
    return fail(kUsage, e.what());
  }
  if (workers < 1) return fail(kUsage, "--workers must be >= 1");
  const BatchSummary s = run_batch(m, out_dir, workers, debug);
  for (const auto& [status, n] : s.counts) std::cout << status << ": " << n << "\n";
  return kOk;
}

int cmd_synth(std::uint64_t seed, int count, const std::string& out_dir, bool boundary) {
  if (count < 1) return fail(kUsage, "--count must be >= 1");
  synth::GenerateSpec spec;
  spec.allow_boundary = boundary;
  nlohmann::json manifest{{"jobs", nlohmann::json::array()}};
  fs::create_directories(out_dir);
  for (int i = 0; i < count; ++i) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(i);
    const synth::SyntheticScene scene = synth::generate(s, spec);
    std::ostringstream id;
    id << "scene_" << std::setw(4) << std::setfill('0') << s;
    synth::write_bundle(scene, fs::path(out_dir) / id.str());
    const std::string query =
        boundary ? scene.shapes.front().name : synth::most_occluded(scene).value_or(scene.shapes.front().name);
    manifest["jobs"].push_back({{"id", id.str()},
                                {"image", id.str() + "/rendered.png"},
                                {"query", query},
                                {"dataset", boundary ? "boundary" : "synthetic"},
                                {"mock_scene", id.str()}});
  }
  std::ofstream(fs::path(out_dir) / "manifest.json") << manifest.dump(2) << "\n";
  std::cout << "wrote " << count << " scene bundle(s) to " << out_dir << "\n";
  return kOk;
}

int cmd_eval_run(const std::string& results, const std::string& truth, const std::string& report,
                 const std::string& endpoint) {
  try {
    std::unique_ptr<RemoteProviders> remote;
    if (!endpoint.empty()) remote = std::make_unique<RemoteProviders>(ProviderEndpoint{endpoint});
    const eval::EvalReport r = eval::evaluate_runs(results, truth, remote.get());
    std::ofstream(report) << r.to_json().dump(2) << "\n";
    std::cout << r.text_table();
    return kOk;
  } catch (const std::exception& e) {
    return fail(kUsage, e.what());
  }
}

int cmd_eval_kappa(const std::string& ratings_path) {
  try {
    std::ifstream in(ratings_path);
    if (!in) throw std::invalid_argument("cannot open " + ratings_path);
    std::stringstream ss;
    ss << in.rdbuf();
    const auto ratings = eval::parse_ratings_csv(ss.str());
    const double k = eval::fleiss_kappa(eval::ratings_table(ratings));
    std::cout << std::fixed << std::setprecision(3) << k << "\n";
    return kOk;
  } catch (const std::exception& e) {
    return fail(kUsage, e.what());
  }
}

int cmd_mock_serve(const std::string& scene_dir, const std::string& host, int port,
                   const std::string& inpainter, const std::string& port_file) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  std::unique_ptr<ProviderServer> server;
  int bound = 0;
  try {
    server = std::make_unique<ProviderServer>(
        make_mock_providers(synth::load_bundle(scene_dir), parse_inpainter(inpainter)));
    bound = server->start(host, port);
  } catch (const std::exception& e) {
    return fail(kUsage, e.what());
  }
  if (!port_file.empty()) {
    const fs::path tmp = port_file + ".tmp";
    std::ofstream(tmp) << bound << "\n";
    fs::rename(tmp, port_file);
  }
  std::cout << "serving " << scene_dir << " on http://" << host << ":" << bound << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  server->stop();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Amodal appearance completion engine"};
  app.require_subcommand(1);

  CompleteOpts co;
  auto* complete = app.add_subcommand("complete", "Complete one occluded object");
  complete->add_option("--image", co.image, "Input RGB image (PNG)")->required();
  complete->add_option("--query", co.query, "Text naming the target")->required();
  complete->add_option("--out", co.out, "Output directory")->required();
  complete->add_option("--config", co.config, "key = value config file");
  auto* ep = complete->add_option("--endpoint", co.endpoint, "Provider service base URL");
  auto* ms = complete->add_option("--mock-scene", co.mock_scene, "Scene bundle for mock providers");
  ep->excludes(ms);
  complete->add_option("--seed", co.seed, "Inpainting seed");
  complete->add_option("--inpainter", co.inpainter, "Mock inpainter: oracle|noisy");
  complete->add_option("--timeout", co.timeout_s, "Per-request timeout in seconds");
  complete->add_option("--retries", co.retries, "Retries per request");
  complete->add_flag("--debug", co.debug, "Write per-iteration intermediates");

  std::string manifest, batch_out;
  int workers = 1;
  bool batch_debug = false;
  auto* batch = app.add_subcommand("batch", "Run a manifest of jobs");
  batch->add_option("--manifest", manifest, "Manifest JSON")->required();
  batch->add_option("--out-dir", batch_out, "Output directory")->required();
  batch->add_option("--workers", workers, "Concurrent jobs");
  batch->add_flag("--debug", batch_debug, "Write per-iteration intermediates");

  std::uint64_t synth_seed = 0;
  int synth_count = 1;
  std::string synth_out;
  bool synth_boundary = false;
  auto* synth_cmd = app.add_subcommand("synth", "Synthetic scene tools");
  synth_cmd->require_subcommand(1);
  auto* gen = synth_cmd->add_subcommand("gen", "Generate scene bundles");
  gen->add_option("--seed", synth_seed, "First scene seed")->required();
  gen->add_option("--count", synth_count, "Number of scenes")->required();
  gen->add_option("--out-dir", synth_out, "Output directory")->required();
  gen->add_flag("--boundary", synth_boundary, "Make the first shape cross a canvas edge");

  std::string results_dir, truth_dir, report, eval_endpoint, ratings;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluation reports");
  eval_cmd->require_subcommand(1);
  auto* run = eval_cmd->add_subcommand("run", "Score run directories against scene bundles");
  run->add_option("--results-dir", results_dir, "Batch output directory")->required();
  run->add_option("--truth-dir", truth_dir, "Directory of scene bundles")->required();
  run->add_option("--report", report, "Report JSON path")->required();
  run->add_option("--endpoint", eval_endpoint, "Scoring service base URL");
  auto* kappa = eval_cmd->add_subcommand("kappa", "Fleiss' kappa of a ratings CSV");
  kappa->add_option("--ratings", ratings, "CSV: image_id,rater_id,chosen_method")->required();

  std::string serve_dir, serve_host = "127.0.0.1", serve_inpainter = "oracle", port_file;
  int serve_port = 8080;
  auto* serve = app.add_subcommand("mock-serve", "Serve mock providers over HTTP");
  serve->add_option("--scene-dir", serve_dir, "Scene bundle")->required();
  serve->add_option("--port", serve_port, "Port (0 picks a free one)")->required();
  serve->add_option("--host", serve_host, "Bind address");
  serve->add_option("--inpainter", serve_inpainter, "oracle|noisy");
  serve->add_option("--port-file", port_file, "Write the bound port here once listening");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (*complete) return cmd_complete(co);
  if (*batch) return cmd_batch(manifest, batch_out, workers, batch_debug);
  if (*gen) return cmd_synth(synth_seed, synth_count, synth_out, synth_boundary);
  if (*run) return cmd_eval_run(results_dir, truth_dir, report, eval_endpoint);
  if (*kappa) return cmd_eval_kappa(ratings);
  if (*serve) return cmd_mock_serve(serve_dir, serve_host, serve_port, serve_inpainter, port_file);
  return kUsage;
}
