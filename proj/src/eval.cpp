#include "amodal/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "amodal/mock_providers.hpp"
#include "amodal/png_io.hpp"
#include "amodal/synth.hpp"

namespace amodal::eval {

namespace fs = std::filesystem;

nlohmann::json to_json(const SsimParams& p) {
  return {{"window", p.window}, {"sigma", p.sigma}, {"k1", p.k1}, {"k2", p.k2}, {"L", p.L},
          {"channel", "luma_rec601"}};
}

std::vector<double> luma(const Image& img) {
  std::vector<double> y(static_cast<std::size_t>(img.width()) * img.height());
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      const Rgb p = img.at(c, r);
      y[static_cast<std::size_t>(r) * img.width() + c] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    }
  }
  return y;
}

namespace {

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size) * size);
  const double c = (size - 1) / 2.0;
  double sum = 0.0;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double d2 = (x - c) * (x - c) + (y - c) * (y - c);
      const double v = std::exp(-d2 / (2.0 * sigma * sigma));
      w[static_cast<std::size_t>(y) * size + x] = v;
      sum += v;
    }
  }
  for (auto& v : w) v /= sum;
  return w;
}

}  // namespace

double ssim(const Image& a, const Image& b, const SsimParams& p) {
  if (a.size() != b.size()) {
    throw DimensionError("ssim: " + to_string(a.size()) + " vs " + to_string(b.size()));
  }
  if (p.window < 1 || std::min(a.width(), a.height()) < p.window) {
    throw std::invalid_argument("ssim: image smaller than the " + std::to_string(p.window) +
                                "px window");
  }
  const auto ya = luma(a);
  const auto yb = luma(b);
  const auto w = gaussian_window(p.window, p.sigma);
  const double c1 = (p.k1 * p.L) * (p.k1 * p.L);
  const double c2 = (p.k2 * p.L) * (p.k2 * p.L);
  const int W = a.width();
  const int n = p.window;

  double total = 0.0;
  long long windows = 0;
  for (int y0 = 0; y0 + n <= a.height(); ++y0) {
    for (int x0 = 0; x0 + n <= W; ++x0) {
      double ma = 0.0, mb = 0.0;
      for (int dy = 0; dy < n; ++dy) {
        const std::size_t row = static_cast<std::size_t>(y0 + dy) * W + x0;
        for (int dx = 0; dx < n; ++dx) {
          const double wt = w[static_cast<std::size_t>(dy) * n + dx];
          ma += wt * ya[row + dx];
          mb += wt * yb[row + dx];
        }
      }
      double va = 0.0, vb = 0.0, cov = 0.0;
      for (int dy = 0; dy < n; ++dy) {
        const std::size_t row = static_cast<std::size_t>(y0 + dy) * W + x0;
        for (int dx = 0; dx < n; ++dx) {
          const double wt = w[static_cast<std::size_t>(dy) * n + dx];
          const double da = ya[row + dx] - ma;
          const double db = yb[row + dx] - mb;
          va += wt * da * da;
          vb += wt * db * db;
          cov += wt * da * db;
        }
      }
      total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++windows;
    }
  }
  return total / double(windows);
}

Image masked_region(const Image& img, const BinaryMask& m, const BackgroundFill& fill) {
  if (img.size() != m.size()) {
    throw DimensionError("masked_region: image " + to_string(img.size()) + " vs mask " +
                         to_string(m.size()));
  }
  if (m.empty()) throw std::invalid_argument("masked_region: empty mask");
  const BoundingBox box = bounding_box(m);
  Image out(Size{box.width(), box.height()});
  for (int y = box.y0; y < box.y1; ++y) {
    for (int x = box.x0; x < box.x1; ++x) {
      out.set(x - box.x0, y - box.y0, m.at(x, y) ? img.at(x, y) : fill.pixel(x, y));
    }
  }
  return out;
}

std::optional<double> provider_score(const Image& pred, const std::string& label,
                                     const TextImageScorer* scorer) {
  if (label.empty()) throw std::invalid_argument("provider_score: empty label");
  if (!scorer) return std::nullopt;
  try {
    const double v = score_text_image(*scorer, pred, label).value;
    if (!std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const BackendUnavailable& e) {
    std::cerr << "warning: metric missing: " << e.what() << "\n";
    return std::nullopt;
  }
}

std::string FailureRow::percent() const {
  if (total <= 0) return "n/a";
  // tenths of a percent = round(1000 f / t), half up, in integers
  const long long tenths = (2000 * failures + total) / (2 * total);
  std::ostringstream os;
  os << tenths / 10 << "." << tenths % 10 << "%";
  return os.str();
}

FailureTable failure_table(const std::vector<Outcome>& outcomes) {
  if (outcomes.empty()) throw std::invalid_argument("failure_table: no outcomes");
  FailureTable t;
  t.overall.dataset = "overall";
  std::map<std::string, std::size_t> index;
  for (const auto& o : outcomes) {
    auto it = index.find(o.dataset);
    if (it == index.end()) {
      it = index.emplace(o.dataset, t.datasets.size()).first;
      t.datasets.push_back({o.dataset, 0, 0});
    }
    FailureRow& row = t.datasets[it->second];
    ++row.total;
    ++t.overall.total;
    if (o.failed) {
      ++row.failures;
      ++t.overall.failures;
    }
  }
  return t;
}

AgreementCounts agreement_distribution(const std::vector<std::vector<std::string>>& choices) {
  AgreementCounts out;
  for (const auto& picks : choices) {
    if (picks.size() != 3) {
      throw std::invalid_argument("agreement_distribution: expected 3 raters, got " +
                                  std::to_string(picks.size()));
    }
    std::map<std::string, int> votes;
    int top = 0;
    for (const auto& p : picks) top = std::max(top, ++votes[p]);
    if (top == 3) {
      ++out.full;
    } else if (top == 2) {
      ++out.partial;
    } else {
      ++out.none;
    }
  }
  return out;
}

long long RatingsTable::raters() const {
  if (counts.empty()) return 0;
  long long n = 0;
  for (long long v : counts.front()) n += v;
  return n;
}

void RatingsTable::validate() const {
  if (counts.empty()) throw std::invalid_argument("ratings table has no items");
  const std::size_t k = categories();
  if (k < 2) throw std::invalid_argument("ratings table needs at least 2 categories");
  const long long n = raters();
  if (n < 2) throw std::invalid_argument("ratings table needs at least 2 raters per item");
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i].size() != k) throw std::invalid_argument("ragged ratings table");
    long long sum = 0;
    for (long long v : counts[i]) {
      if (v < 0) throw std::invalid_argument("negative rating count");
      sum += v;
    }
    if (sum != n) {
      throw std::invalid_argument("item " + std::to_string(i) + " has " + std::to_string(sum) +
                                  " ratings, expected " + std::to_string(n));
    }
  }
}

double fleiss_kappa(const RatingsTable& r) {
  r.validate();
  const double N = double(r.items());
  const long long n = r.raters();
  const std::size_t k = r.categories();

  // P̄ as the exact rational Σ_i (Σ_j n_ij² − n) / (N n (n−1))
  long long agree = 0;
  std::vector<long long> col(k, 0);
  for (const auto& row : r.counts) {
    long long sq = 0;
    for (std::size_t j = 0; j < k; ++j) {
      sq += row[j] * row[j];
      col[j] += row[j];
    }
    agree += sq - n;
  }
  const double p_bar = double(agree) / (N * double(n * (n - 1)));

  // P̄e as an exact rational Σ col² / (N n)²
  long long num = 0;
  for (long long c : col) num += c * c;
  const long long den = static_cast<long long>(r.items()) * n * static_cast<long long>(r.items()) * n;
  if (num == den) throw DegenerateKappa("fleiss_kappa undefined: expected agreement is 1");
  const double pe = double(num) / double(den);
  return (p_bar - pe) / (1.0 - pe);
}

bool area_ratio_ok(const BinaryMask& visible, double threshold) {
  const long long total = visible.size().pixels();
  if (total == 0) return false;
  return double(visible.area()) >= threshold * double(total);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::vector<Rating> parse_ratings_csv(const std::string& text) {
  std::vector<Rating> out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 3) {
      throw std::invalid_argument("ratings line " + std::to_string(lineno) + ": expected 3 columns");
    }
    if (out.empty() && lineno == 1 && cells[0] == "image_id") continue;
    if (cells[0].empty() || cells[1].empty() || cells[2].empty()) {
      throw std::invalid_argument("ratings line " + std::to_string(lineno) + ": empty field");
    }
    out.push_back({cells[0], cells[1], cells[2]});
  }
  if (out.empty()) throw std::invalid_argument("ratings file has no rows");
  return out;
}

std::vector<std::vector<std::string>> choices_by_image(const std::vector<Rating>& ratings) {
  std::vector<std::vector<std::string>> out;
  std::map<std::string, std::size_t> index;
  for (const auto& r : ratings) {
    auto it = index.find(r.image_id);
    if (it == index.end()) {
      it = index.emplace(r.image_id, out.size()).first;
      out.emplace_back();
    }
    out[it->second].push_back(r.method);
  }
  return out;
}

RatingsTable ratings_table(const std::vector<Rating>& ratings) {
  std::set<std::string> methods;
  for (const auto& r : ratings) methods.insert(r.method);
  const std::vector<std::string> cats(methods.begin(), methods.end());
  RatingsTable t;
  for (const auto& picks : choices_by_image(ratings)) {
    std::vector<long long> row(cats.size(), 0);
    for (const auto& p : picks) {
      ++row[std::lower_bound(cats.begin(), cats.end(), p) - cats.begin()];
    }
    t.counts.push_back(std::move(row));
  }
  return t;
}

Aggregate aggregate(const std::vector<std::optional<double>>& values) {
  std::vector<double> v;
  for (const auto& x : values) {
    if (x) v.push_back(*x);
  }
  Aggregate a;
  a.count = v.size();
  if (v.empty()) return a;
  double sum = 0.0;
  for (double x : v) sum += x;
  a.mean = sum / double(v.size());
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  a.median = v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2.0;
  return a;
}

namespace {

nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json aggregate_json(const Aggregate& a) {
  return {{"count", a.count}, {"mean", opt_json(a.mean)}, {"median", opt_json(a.median)}};
}

template <typename Get>
Aggregate aggregate_items(const std::vector<ItemMetrics>& items, Get get) {
  std::vector<std::optional<double>> v;
  for (const auto& it : items) v.push_back(get(it));
  return aggregate(v);
}

std::string fmt(const std::optional<double>& v, int digits) {
  if (!v) return "missing";
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << *v;
  return os.str();
}

}  // namespace

EvalReport build_report(std::vector<ItemMetrics> items, const std::string& method) {
  EvalReport r;
  r.method = method;
  std::sort(items.begin(), items.end(),
            [](const ItemMetrics& a, const ItemMetrics& b) { return a.id < b.id; });
  r.items = std::move(items);
  std::vector<Outcome> outcomes;
  for (const auto& it : r.items) {
    ++r.status_counts[it.status];
    outcomes.push_back({it.dataset, it.status == "target_not_found"});
  }
  if (!outcomes.empty()) r.failures = failure_table(outcomes);
  return r;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["method"] = method;
  j["ssim_params"] = eval::to_json(ssim_params);
  j["items"] = nlohmann::json::array();
  for (const auto& it : items) {
    j["items"].push_back({{"id", it.id},
                          {"dataset", it.dataset},
                          {"status", it.status},
                          {"ssim", opt_json(it.ssim)},
                          {"iou", opt_json(it.iou)},
                          {"clip", opt_json(it.clip)},
                          {"lpips", opt_json(it.lpips)},
                          {"feature_similarity", opt_json(it.feature_similarity)}});
  }
  j["aggregates"] = {
      {"ssim", aggregate_json(aggregate_items(items, [](auto& i) { return i.ssim; }))},
      {"iou", aggregate_json(aggregate_items(items, [](auto& i) { return i.iou; }))},
      {"clip", aggregate_json(aggregate_items(items, [](auto& i) { return i.clip; }))},
      {"lpips", aggregate_json(aggregate_items(items, [](auto& i) { return i.lpips; }))},
      {"feature_similarity",
       aggregate_json(aggregate_items(items, [](auto& i) { return i.feature_similarity; }))}};
  j["status_counts"] = status_counts;
  nlohmann::json ft = nlohmann::json::array();
  for (const auto& row : failures.datasets) {
    ft.push_back({{"dataset", row.dataset},
                  {"failures", row.failures},
                  {"total", row.total},
                  {"rate", row.rate()},
                  {"percent", row.percent()}});
  }
  j["failure_table"] = {{"datasets", ft},
                        {"overall",
                         {{"failures", failures.overall.failures},
                          {"total", failures.overall.total},
                          {"rate", failures.overall.rate()},
                          {"percent", failures.overall.percent()}}}};
  return j;
}

std::string EvalReport::text_table() const {
  std::vector<std::string> header{"Method"};
  for (const auto& row : failures.datasets) header.push_back(row.dataset);
  header.push_back("Overall");

  const auto by_dataset = [&](const std::string& ds, auto get) {
    std::vector<ItemMetrics> sel;
    for (const auto& it : items) {
      if (ds.empty() || it.dataset == ds) sel.push_back(it);
    }
    return aggregate_items(sel, get).mean;
  };

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> fail{method + " failures"};
  for (const auto& row : failures.datasets) fail.push_back(row.percent());
  fail.push_back(failures.overall.percent());
  rows.push_back(fail);

  const auto metric_row = [&](const std::string& name, auto get) {
    std::vector<std::string> r{method + " " + name};
    for (const auto& row : failures.datasets) r.push_back(fmt(by_dataset(row.dataset, get), 3));
    r.push_back(fmt(by_dataset("", get), 3));
    rows.push_back(r);
  };
  metric_row("CLIP", [](auto& i) { return i.clip; });
  metric_row("LPIPS", [](auto& i) { return i.lpips; });
  metric_row("SSIM", [](auto& i) { return i.ssim; });
  metric_row("IoU", [](auto& i) { return i.iou; });

  std::vector<std::size_t> widths(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) widths[c] = header[c].size();
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) widths[c] = std::max(widths[c], r[c].size());
  }
  std::ostringstream os;
  const auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      os << (c ? " | " : "") << std::setw(int(widths[c])) << (c ? std::right : std::left)
         << cells[c];
    }
    os << "\n";
  };
  line(header);
  std::size_t total = 0;
  for (auto w : widths) total += w + 3;
  os << std::string(total - 3, '-') << "\n";
  for (const auto& r : rows) line(r);
  return os.str();
}

namespace {

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return nlohmann::json::parse(in);
}

ItemMetrics score_item(const std::string& id, const std::string& dataset, const std::string& status,
                       const fs::path& run, const fs::path& truth,
                       const TextImageScorer* scorer, const SsimParams& params) {
  ItemMetrics m{id, dataset, status, {}, {}, {}, {}, {}};
  if (status != "completed" || !fs::exists(truth / "scene.json")) return m;

  const auto trace = read_json(run / "trace.json");
  const std::string query = trace.at("query").get<std::string>();
  const auto scene = synth::load_bundle(truth);
  if (!scene.find(query)) return m;

  const RgbaImage result = load_rgba(run / "result.png");
  const BinaryMask amodal_full = load_mask(run / "amodal.png");
  const Offset off{trace.at("canvas_offset").at(0).get<int>(),
                   trace.at("canvas_offset").at(1).get<int>()};
  const BoundingBox box{off.dx, off.dy, off.dx + scene.canvas.width,
                        off.dy + scene.canvas.height};
  const BinaryMask amodal = crop(amodal_full, box);
  const Image rgb = crop(result.rgb(), box);

  m.iou = iou(amodal, synth::amodal_mask(scene, query));

  const BinaryMask visible = synth::visible_mask(scene, query);
  if (!visible.empty()) {
    const BoundingBox vb = bounding_box(visible);
    if (std::min(vb.width(), vb.height()) >= params.window) {
      m.ssim = ssim(masked_region(synth::render(scene), visible), masked_region(rgb, visible),
                    params);
    }
  }

  std::unique_ptr<SceneOracle> fallback;
  if (!scorer) {
    fallback = std::make_unique<SceneOracle>(scene);
    scorer = fallback.get();
  }
  if (!amodal_full.empty()) {
    m.clip = provider_score(masked_region(result.rgb(), amodal_full), query, scorer);
  }
  return m;
}

}  // namespace

EvalReport evaluate_runs(const fs::path& results_dir, const fs::path& truth_dir,
                         const TextImageScorer* scorer) {
  if (!fs::is_directory(results_dir)) {
    throw std::invalid_argument("results dir not found: " + results_dir.string());
  }
  struct Entry {
    std::string id, dataset, status;
  };
  std::vector<Entry> entries;
  const fs::path summary = results_dir / "summary.json";
  if (fs::exists(summary)) {
    const auto doc = read_json(summary);
    for (const auto& job : doc.at("jobs")) {
      entries.push_back({job.at("id").get<std::string>(), job.value("dataset", "default"),
                         job.at("status").get<std::string>()});
    }
  } else {
    for (const auto& d : fs::directory_iterator(results_dir)) {
      if (!d.is_directory() || !fs::exists(d.path() / "trace.json")) continue;
      const auto trace = read_json(d.path() / "trace.json");
      entries.push_back({d.path().filename().string(), "default",
                         trace.at("status").get<std::string>()});
    }
  }
  const SsimParams params;
  std::vector<ItemMetrics> items;
  for (const auto& e : entries) {
    items.push_back(score_item(e.id, e.dataset, e.status, results_dir / e.id, truth_dir / e.id,
                               scorer, params));
  }
  EvalReport r = build_report(std::move(items));
  r.ssim_params = params;
  return r;
}

}  // namespace amodal::eval
