#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>

#include "amodal/batch.hpp"
#include "amodal/eval.hpp"
#include "amodal/png_io.hpp"
#include "amodal/synth.hpp"
#include "test_util.hpp"

using namespace amodal;
using namespace testutil;
using nlohmann::json;

namespace {

// Ten scene bundles; jobs 3 and 7 ask for something that is not there.
json ten_jobs(const std::filesystem::path& root) {
  json jobs = json::array();
  for (int i = 0; i < 10; ++i) {
    const std::string id = "scene_" + std::to_string(i);
    const auto scene = synth::generate(100 + i);
    synth::write_bundle(scene, root / id);
    const bool bogus = i == 3 || i == 7;
    jobs.push_back({{"id", id},
                    {"image", id + "/rendered.png"},
                    {"query", bogus ? "unicorn" : *synth::most_occluded(scene)},
                    {"dataset", i < 5 ? "first" : "second"},
                    {"mock_scene", id}});
  }
  return {{"jobs", jobs}};
}

}  // namespace

TEST_CASE("batch records per-job statuses") {
  TempDir dir("batch");
  const json m = ten_jobs(dir.path());
  const BatchManifest manifest = parse_manifest(m, dir.path());
  const BatchSummary s = run_batch(manifest, dir / "out", 2);
  CHECK(s.counts.at("completed") == 8);
  CHECK(s.counts.at("target_not_found") == 2);
  REQUIRE(s.jobs.size() == 10);
  CHECK(std::is_sorted(s.jobs.begin(), s.jobs.end(),
                       [](const JobOutcome& a, const JobOutcome& b) { return a.id < b.id; }));
  for (const auto& j : s.jobs) {
    CHECK(std::filesystem::exists(dir / "out" / j.id / "trace.json"));
    CHECK(std::filesystem::exists(dir / "out" / j.id / "result.png") == (j.status == "completed"));
  }

  std::ifstream in(dir / "out" / "summary.json");
  const json written = json::parse(in);
  CHECK(written == s.to_json());

  // Failure accounting in the report matches the batch outcome.
  const eval::EvalReport report = eval::evaluate_runs(dir / "out", dir.path());
  CHECK(report.failures.overall.failures == 2);
  CHECK(report.failures.overall.total == 10);
  CHECK(report.failures.overall.percent() == "20.0%");
  REQUIRE(report.failures.datasets.size() == 2);
  CHECK(report.failures.datasets[0].percent() == "20.0%");
  for (const auto& item : report.items) {
    if (item.status != "completed") continue;
    REQUIRE(item.iou.has_value());
    CHECK(*item.iou >= 0.95);
    CHECK(item.clip == 1.0);
    CHECK_FALSE(item.lpips.has_value());
  }
}

TEST_CASE("worker count does not change the outputs") {
  TempDir dir("workers");
  const BatchManifest manifest = parse_manifest(ten_jobs(dir.path()), dir.path());
  run_batch(manifest, dir / "one", 1);
  run_batch(manifest, dir / "four", 4);
  CHECK(read_file(dir / "one" / "summary.json") == read_file(dir / "four" / "summary.json"));
  for (const auto& job : manifest.jobs) {
    CHECK(read_file(dir / "one" / job.id / "trace.json") == read_file(dir / "four" / job.id / "trace.json"));
  }
}

TEST_CASE("manifest validation") {
  TempDir dir("manifest");
  const json good = ten_jobs(dir.path());
  CHECK(parse_manifest(good, dir.path()).jobs.size() == 10);

  const auto bad = [&](auto mutate) {
    json m = good;
    mutate(m);
    CHECK_THROWS_AS(parse_manifest(m, dir.path()), ManifestError);
  };
  bad([](json& m) { m["jobs"] = json::array(); });
  bad([](json& m) { m.erase("jobs"); });
  bad([](json& m) { m["jobs"][1]["id"] = m["jobs"][0]["id"]; });
  bad([](json& m) { m["jobs"][0]["id"] = "../escape"; });
  bad([](json& m) { m["jobs"][0]["image"] = "nowhere.png"; });
  bad([](json& m) { m["jobs"][0].erase("query"); });
  bad([](json& m) { m["jobs"][0].erase("mock_scene"); });
  bad([](json& m) { m["mock_inpainter"] = "magic"; });
  bad([](json& m) { m["config"] = {{"max_iterations", 0}}; });
  bad([](json& m) { m["config"] = {{"nonsense", 1}}; });
  bad([](json& m) { m["endpoint"] = 5; });

  json with_endpoint = good;
  with_endpoint["jobs"][0].erase("mock_scene");
  with_endpoint["endpoint"] = "http://127.0.0.1:9";
  CHECK(parse_manifest(with_endpoint, dir.path()).endpoint->base_url == "http://127.0.0.1:9");

  json cfg = good;
  cfg["config"] = {{"max_iterations", 2}, {"background", "10,20,30"}};
  cfg["mock_inpainter"] = "noisy";
  const BatchManifest m = parse_manifest(cfg, dir.path());
  CHECK(m.config.max_iterations == 2);
  CHECK(m.mock_inpainter == MockInpaint::noisy);

  std::ofstream(dir / "broken.json") << "{ jobs: ";
  CHECK_THROWS_AS(load_manifest(dir / "broken.json"), ManifestError);
  CHECK_THROWS_AS(load_manifest(dir / "absent.json"), ManifestError);
  std::ofstream(dir / "m.json") << good.dump();
  CHECK(load_manifest(dir / "m.json").jobs[0].image == dir / "scene_0" / "rendered.png");
}

TEST_CASE("unreachable backend is recorded per job") {
  TempDir dir("down");
  const auto scene = synth::generate(5);
  synth::write_bundle(scene, dir / "s");
  const json m{{"jobs", {{{"id", "s"}, {"image", "s/rendered.png"}, {"query", "x"}}}},
               {"endpoint", {{"base_url", "http://127.0.0.1:1"}, {"timeout_s", 0.5}, {"retries", 0}}}};
  const BatchSummary s = run_batch(parse_manifest(m, dir.path()), dir / "out", 1);
  REQUIRE(s.jobs.size() == 1);
  CHECK(s.jobs[0].status == "backend_unavailable");
  CHECK_FALSE(s.jobs[0].error.empty());
}

TEST_CASE("noisy batches hit the iteration cap") {
  TempDir dir("noisy");
  json m = ten_jobs(dir.path());
  m["mock_inpainter"] = "noisy";
  const BatchSummary s = run_batch(parse_manifest(m, dir.path()), dir / "out", 2);
  for (const auto& j : s.jobs) {
    if (j.status != "completed") continue;
    CHECK(j.iterations == 3);
    CHECK(j.termination == "max_iterations");
  }
}
