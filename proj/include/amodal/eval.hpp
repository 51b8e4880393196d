#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "amodal/image.hpp"
#include "amodal/mask.hpp"
#include "amodal/providers.hpp"

namespace amodal::eval {

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double L = 255.0;
};

nlohmann::json to_json(const SsimParams& p);

// Rec. 601 luma, row-major.
std::vector<double> luma(const Image& img);

/// Mean SSIM over every fully contained Gaussian window of the luma channel.
double ssim(const Image& a, const Image& b, const SsimParams& params = {});

// Crop to the mask's bounding box; pixels outside the mask take the fill.
Image masked_region(const Image& img, const BinaryMask& m,
                    const BackgroundFill& fill = BackgroundFill{});

// nullopt marks the metric as missing (no scorer, or the backend failed).
std::optional<double> provider_score(const Image& pred, const std::string& label,
                                     const TextImageScorer* scorer);

struct Outcome {
  std::string dataset;
  bool failed = false;  // target_not_found
};

struct FailureRow {
  std::string dataset;
  long long failures = 0;
  long long total = 0;

  double rate() const { return total ? double(failures) / double(total) : 0.0; }
  // Percentage to one decimal, rounded half up on the exact ratio.
  std::string percent() const;
};

struct FailureTable {
  std::vector<FailureRow> datasets;  // first-appearance order
  FailureRow overall;
};

FailureTable failure_table(const std::vector<Outcome>& outcomes);

struct AgreementCounts {
  long long full = 0;     // 3/3
  long long partial = 0;  // 2/3
  long long none = 0;     // 1/3
  long long total() const { return full + partial + none; }
};

AgreementCounts agreement_distribution(const std::vector<std::vector<std::string>>& choices);

struct RatingsTable {
  // counts[i][j]: raters assigning item i to category j.
  std::vector<std::vector<long long>> counts;

  std::size_t items() const { return counts.size(); }
  std::size_t categories() const { return counts.empty() ? 0 : counts.front().size(); }
  long long raters() const;
  void validate() const;
};

class DegenerateKappa : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

double fleiss_kappa(const RatingsTable& r);

bool area_ratio_ok(const BinaryMask& visible, double threshold = 0.02);

struct Rating {
  std::string image_id;
  std::string rater_id;
  std::string method;
};

// CSV with columns image_id, rater_id, chosen_method; header row optional.
std::vector<Rating> parse_ratings_csv(const std::string& text);
// Items in first-appearance order, categories sorted by name.
RatingsTable ratings_table(const std::vector<Rating>& ratings);
std::vector<std::vector<std::string>> choices_by_image(const std::vector<Rating>& ratings);

struct ItemMetrics {
  std::string id;
  std::string dataset;
  std::string status;
  std::optional<double> ssim;
  std::optional<double> iou;
  std::optional<double> clip;
  std::optional<double> lpips;
  std::optional<double> feature_similarity;
};

struct Aggregate {
  std::size_t count = 0;
  std::optional<double> mean;
  std::optional<double> median;
};

Aggregate aggregate(const std::vector<std::optional<double>>& values);

struct EvalReport {
  std::string method = "ours";
  SsimParams ssim_params;
  std::vector<ItemMetrics> items;
  FailureTable failures;
  std::map<std::string, long long> status_counts;

  nlohmann::json to_json() const;
  // Method x dataset table of failure rates and metric means.
  std::string text_table() const;
};

EvalReport build_report(std::vector<ItemMetrics> items, const std::string& method = "ours");

/// Scores every results-dir/<id>/ run against truth-dir/<id>/ scene bundles.
/// Dataset tags and statuses come from results-dir/summary.json when present.
EvalReport evaluate_runs(const std::filesystem::path& results_dir,
                         const std::filesystem::path& truth_dir,
                         const TextImageScorer* scorer = nullptr);

}  // namespace amodal::eval
