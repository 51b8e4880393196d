#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "amodal/eval.hpp"
#include "amodal/mock_providers.hpp"
#include "amodal/synth.hpp"
#include "test_util.hpp"

using namespace amodal;
using namespace amodal::eval;
using namespace testutil;

namespace {

class DownScorer final : public TextImageScorer {
 public:
  Score score_text_image(const Image&, const std::string&) const override {
    throw BackendUnavailable("http://x/v1/score", 10, "down");
  }
};

std::vector<Outcome> outcomes(const std::string& ds, int failures, int total) {
  std::vector<Outcome> out;
  for (int i = 0; i < total; ++i) out.push_back({ds, i < failures});
  return out;
}

std::vector<Outcome> concat(std::vector<std::vector<Outcome>> parts) {
  std::vector<Outcome> out;
  for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

RatingsTable random_table(std::mt19937_64& rng) {
  const int items = 2 + int(rng() % 10);
  const int cats = 2 + int(rng() % 4);
  const int raters = 2 + int(rng() % 5);
  RatingsTable t;
  for (int i = 0; i < items; ++i) {
    std::vector<long long> row(cats, 0);
    for (int r = 0; r < raters; ++r) ++row[rng() % cats];
    t.counts.push_back(row);
  }
  return t;
}

}  // namespace

TEST_CASE("ssim of an image with itself is one") {
  std::mt19937_64 rng(81);
  for (int i = 0; i < 20; ++i) {
    const Image x = random_image(rng, 11 + int(rng() % 30), 11 + int(rng() % 30));
    CHECK(std::abs(ssim(x, x) - 1.0) <= 1e-9);
  }
  CHECK(ssim(Image(20, 20, {100, 100, 100}), Image(20, 20, {100, 100, 100})) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim of two constants matches the closed form") {
  const double c1 = (0.01 * 255) * (0.01 * 255);
  const double expected = (2.0 * 100 * 150 + c1) / (100.0 * 100 + 150.0 * 150 + c1);
  const double got = ssim(Image(16, 16, {100, 100, 100}), Image(16, 16, {150, 150, 150}));
  CHECK(std::abs(got - expected) <= 1e-9);
}

TEST_CASE("ssim is symmetric and bounded") {
  std::mt19937_64 rng(82);
  for (int i = 0; i < 20; ++i) {
    const Image a = random_image(rng, 24, 18);
    const Image b = random_image(rng, 24, 18);
    const double ab = ssim(a, b);
    CHECK(std::abs(ab - ssim(b, a)) <= 1e-12);
    CHECK(ab <= 1.0);
    CHECK(ab >= -1.0);
  }
}

TEST_CASE("ssim errors and parameters") {
  CHECK_THROWS_AS(ssim(Image(20, 20), Image(20, 21)), DimensionError);
  CHECK_THROWS_AS(ssim(Image(10, 20), Image(10, 20)), std::invalid_argument);
  SsimParams p;
  p.window = 7;
  CHECK_NOTHROW(ssim(Image(10, 20), Image(10, 20), p));
  const auto j = to_json(SsimParams{});
  CHECK(j.at("window") == 11);
  CHECK(j.at("sigma") == 1.5);
  const auto l = luma(Image(1, 1, {255, 0, 0}));
  CHECK(l[0] == doctest::Approx(0.299 * 255));
}

TEST_CASE("masked region examples") {
  std::mt19937_64 rng(83);
  const Image img = random_image(rng, 10, 8);
  CHECK(masked_region(img, BinaryMask::full({10, 8})) == img);
  BinaryMask one(10, 8);
  one.set(3, 5);
  const Image px = masked_region(img, one);
  CHECK(px.size() == Size{1, 1});
  CHECK(px.at(0, 0) == img.at(3, 5));
  CHECK_THROWS_AS(masked_region(img, BinaryMask(10, 8)), std::invalid_argument);
  for (int i = 0; i < 30; ++i) {
    BinaryMask m = random_mask(rng, 10, 8, 0.2);
    m.set(int(rng() % 10), int(rng() % 8));
    const BoundingBox box = bounding_box(m);
    const Image r = masked_region(img, m, BackgroundFill::solid({1, 1, 1}));
    CHECK(r.width() == box.x1 - box.x0);
    CHECK(r.height() == box.y1 - box.y0);
    for (int y = 0; y < r.height(); ++y) {
      for (int x = 0; x < r.width(); ++x) {
        const bool in = m.at(x + box.x0, y + box.y0);
        CHECK(r.at(x, y) == (in ? img.at(x + box.x0, y + box.y0) : Rgb{1, 1, 1}));
      }
    }
  }
}

TEST_CASE("provider scores") {
  const auto scene = synth::generate(2);
  SceneOracle oracle(scene);
  const std::string name = scene.shapes[0].name;
  const Image pred = masked_region(synth::render(scene), synth::visible_mask(scene, name));
  CHECK(provider_score(pred, name, &oracle) == 1.0);
  CHECK(provider_score(pred, name, &oracle) == provider_score(pred, name, &oracle));
  CHECK_FALSE(provider_score(pred, name, nullptr).has_value());
  DownScorer down;
  CHECK_FALSE(provider_score(pred, name, &down).has_value());
  CHECK_THROWS_AS(provider_score(pred, "", &oracle), std::invalid_argument);
}

TEST_CASE("failure table arithmetic") {
  const FailureTable t = failure_table(outcomes("synthetic", 4, 100));
  CHECK(t.overall.failures == 4);
  CHECK(t.overall.total == 100);
  CHECK(t.overall.percent() == "4.0%");
  CHECK(failure_table(outcomes("x", 0, 37)).overall.percent() == "0.0%");
  CHECK_THROWS_AS(failure_table({}), std::invalid_argument);

  // Splits across datasets keep first-appearance order.
  const FailureTable s = failure_table(concat({outcomes("b", 1, 40), outcomes("a", 3, 60)}));
  REQUIRE(s.datasets.size() == 2);
  CHECK(s.datasets[0].dataset == "b");
  CHECK(s.datasets[0].percent() == "2.5%");
  CHECK(s.datasets[1].percent() == "5.0%");
  CHECK(s.overall.percent() == "4.0%");

  CHECK(FailureRow{"x", 1, 8}.percent() == "12.5%");  // exact half rounds up
  CHECK(FailureRow{"x", 1, 3}.percent() == "33.3%");
  CHECK(FailureRow{"x", 2, 3}.percent() == "66.7%");
  CHECK(FailureRow{"x", 1, 2000}.percent() == "0.1%");   // 0.05 rounds up
  CHECK(FailureRow{"x", 1, 2001}.percent() == "0.0%");
  CHECK(FailureRow{"x", 5, 5}.percent() == "100.0%");
}

TEST_CASE("property: overall failure rate is the count weighted mean") {
  std::mt19937_64 rng(84);
  for (int i = 0; i < 100; ++i) {
    std::vector<std::vector<Outcome>> parts;
    const int n = 1 + int(rng() % 5);
    for (int d = 0; d < n; ++d) {
      const int total = 1 + int(rng() % 50);
      parts.push_back(outcomes("d" + std::to_string(d), int(rng() % (total + 1)), total));
    }
    std::shuffle(parts.begin(), parts.end(), rng);
    const FailureTable t = failure_table(concat(parts));
    long long num = 0;
    long long den = 0;
    for (const auto& row : t.datasets) {
      // rate * total summed over datasets, kept as integers.
      num += row.failures;
      den += row.total;
    }
    CHECK(num * t.overall.total == t.overall.failures * den);
    double weighted = 0;
    for (const auto& row : t.datasets) weighted += row.rate() * double(row.total);
    CHECK(weighted / double(den) == doctest::Approx(t.overall.rate()).epsilon(1e-12));
  }
}

TEST_CASE("benchmark failure rates reproduce from integer counts") {
  // Dataset sizes: Visual Genome 1234, COCO-A 751, free images 228, LAION 166.
  const FailureTable ours = failure_table(concat({outcomes("VG", 78, 1234), outcomes("COCO-A", 13, 751),
                                                  outcomes("Free", 4, 228), outcomes("LAION", 3, 166)}));
  CHECK(ours.datasets[0].percent() == "6.3%");
  CHECK(ours.overall.total == 2379);
  CHECK(ours.overall.percent() == "4.1%");

  const FailureTable p2g = failure_table(concat({outcomes("VG", 0, 1234), outcomes("COCO-A", 0, 751),
                                                 outcomes("Free", 0, 228), outcomes("LAION", 0, 166)}));
  for (const auto& row : p2g.datasets) CHECK(row.percent() == "0.0%");
  CHECK(p2g.overall.percent() == "0.0%");
}

TEST_CASE("agreement distribution") {
  const auto d = agreement_distribution({{"A", "A", "A"}, {"A", "A", "B"}, {"B", "A", "A"}, {"A", "B", "C"}});
  CHECK(d.full == 1);
  CHECK(d.partial == 2);
  CHECK(d.none == 1);
  CHECK(d.total() == 4);
  CHECK_THROWS_AS(agreement_distribution({{"A", "B"}}), std::invalid_argument);
  CHECK(agreement_distribution({}).total() == 0);
}

TEST_CASE("fleiss kappa examples") {
  CHECK(fleiss_kappa({{{3, 0}, {0, 3}}}) == 1.0);
  CHECK(std::abs(fleiss_kappa({{{2, 1}, {1, 2}}}) - (-1.0 / 3.0)) <= 1e-12);
  CHECK(fleiss_kappa({{{4, 0, 0}, {0, 4, 0}, {0, 0, 4}, {4, 0, 0}}}) == 1.0);
  CHECK_THROWS_AS(fleiss_kappa({{{3, 0}, {3, 0}}}), DegenerateKappa);
  CHECK_THROWS_AS(fleiss_kappa({{{3, 0}, {2, 0}}}), std::invalid_argument);
  CHECK_THROWS_AS(fleiss_kappa({{{1, 0}, {0, 1}}}), std::invalid_argument);
  CHECK_THROWS_AS(fleiss_kappa({{{3}, {3}}}), std::invalid_argument);
  CHECK_THROWS_AS(fleiss_kappa(RatingsTable{}), std::invalid_argument);
}

TEST_CASE("property: fleiss kappa ignores row and column order") {
  std::mt19937_64 rng(85);
  int checked = 0;
  while (checked < 50) {
    RatingsTable t = random_table(rng);
    double k = 0;
    try {
      k = fleiss_kappa(t);
    } catch (const DegenerateKappa&) {
      continue;
    }
    ++checked;
    std::vector<std::size_t> perm(t.categories());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    RatingsTable cols = t;
    for (std::size_t i = 0; i < t.items(); ++i) {
      for (std::size_t j = 0; j < perm.size(); ++j) cols.counts[i][j] = t.counts[i][perm[j]];
    }
    RatingsTable rows = t;
    std::shuffle(rows.counts.begin(), rows.counts.end(), rng);
    CHECK(fleiss_kappa(cols) == k);
    CHECK(fleiss_kappa(rows) == k);
    CHECK(k <= 1.0);
  }
}

TEST_CASE("area ratio filter") {
  BinaryMask m(100, 100);
  CHECK_FALSE(area_ratio_ok(m));
  for (int i = 0; i < 190; ++i) m.set(i % 100, i / 100);
  CHECK_FALSE(area_ratio_ok(m));
  for (int i = 190; i < 200; ++i) m.set(i % 100, i / 100);
  CHECK(area_ratio_ok(m));
  CHECK(area_ratio_ok(BinaryMask::full({3, 3})));
}

TEST_CASE("ratings csv") {
  const auto ratings = parse_ratings_csv(
      "image_id,rater_id,chosen_method\n"
      "img1,r1,ours\n"
      "img1,r2,ours\n"
      "img1,r3,pix2gestalt\n"
      "img2,r1,pd-mc\r\n"
      "img2,r2,ours\n"
      "img2,r3,pd-mc\n");
  REQUIRE(ratings.size() == 6);
  CHECK(ratings[3].method == "pd-mc");
  const RatingsTable t = ratings_table(ratings);
  // Categories sorted: ours, pd-mc, pix2gestalt.
  CHECK(t.counts == std::vector<std::vector<long long>>{{2, 0, 1}, {1, 2, 0}});
  CHECK(t.raters() == 3);
  const auto choices = choices_by_image(ratings);
  CHECK(agreement_distribution(choices).partial == 2);

  CHECK(parse_ratings_csv("a,r1,x\na,r2,x\n").size() == 2);
  CHECK_THROWS_AS(parse_ratings_csv("a,r1\n"), std::invalid_argument);
}

TEST_CASE("aggregates skip missing values") {
  const Aggregate a = aggregate({1.0, std::nullopt, 3.0, 2.0});
  CHECK(a.count == 3);
  CHECK(*a.mean == 2.0);
  CHECK(*a.median == 2.0);
  CHECK(*aggregate({1.0, 4.0}).median == 2.5);
  const Aggregate none = aggregate({std::nullopt});
  CHECK(none.count == 0);
  CHECK_FALSE(none.mean.has_value());
}

TEST_CASE("report json and text table") {
  std::vector<ItemMetrics> items{
      {"b", "vg", "completed", 0.9, 1.0, 1.0, std::nullopt, std::nullopt},
      {"a", "vg", "target_not_found", std::nullopt, std::nullopt, std::nullopt, std::nullopt, std::nullopt},
      {"c", "coco", "completed", 0.7, 0.5, std::nullopt, std::nullopt, std::nullopt},
  };
  const EvalReport r = build_report(items);
  CHECK(r.items[0].id == "a");
  CHECK(r.status_counts.at("completed") == 2);
  const auto j = r.to_json();
  CHECK(j.at("items").at(0).at("ssim").is_null());
  CHECK(j.at("aggregates").at("ssim").at("mean") == doctest::Approx(0.8));
  CHECK(j.at("aggregates").at("lpips").at("count") == 0);
  CHECK(j.at("failure_table").at("overall").at("percent") == "33.3%");
  CHECK(j.at("ssim_params").at("k2") == 0.03);

  const std::string table = r.text_table();
  CHECK(table.find("Method") != std::string::npos);
  CHECK(table.find("Overall") != std::string::npos);
  CHECK(table.find("50.0%") != std::string::npos);
  CHECK(table.find("missing") != std::string::npos);
}
