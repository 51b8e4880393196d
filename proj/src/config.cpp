#include "amodal/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "amodal/png_io.hpp"

namespace amodal {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int r = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config " + key + ": expected integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config " + key + ": expected number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config " + key + ": expected boolean, got '" + v + "'");
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

Rgb parse_rgb(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  std::string part;
  Rgb out{};
  int i = 0;
  while (std::getline(is, part, ',')) {
    if (i >= 3) throw ConfigError("config " + key + ": expected r,g,b");
    const int c = to_int(key, trim(part));
    if (c < 0 || c > 255) throw ConfigError("config " + key + ": channel out of range");
    out[i++] = static_cast<std::uint8_t>(c);
  }
  if (i != 3) throw ConfigError("config " + key + ": expected r,g,b");
  return out;
}

}  // namespace

void PipelineConfig::validate() const {
  if (!(epsilon_frac > 0.0 && epsilon_frac < 1.0)) {
    throw ConfigError("epsilon_frac must lie in (0,1)");
  }
  if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
  if (morph_radius < 1 || boundary_radius < 1 || band_width < 1 || transition_width < 1) {
    throw ConfigError("radii and widths must be >= 1");
  }
  if (max_boundary_rounds < 1) throw ConfigError("max_boundary_rounds must be >= 1");
  if (min_bg_area_frac < 0.0 || min_bg_area_frac >= 1.0) {
    throw ConfigError("min_bg_area_frac must lie in [0,1)");
  }
  if (self_overlap_iou <= 0.0 || self_overlap_iou > 1.0) {
    throw ConfigError("self_overlap_iou must lie in (0,1]");
  }
  if (amodal_tolerance < 0 || amodal_tolerance > 255) {
    throw ConfigError("amodal_tolerance must lie in [0,255]");
  }
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
}

long long PipelineConfig::epsilon_pixels(Size canvas) const {
  return static_cast<long long>(std::ceil(epsilon_frac * static_cast<double>(canvas.pixels())));
}

void PipelineConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "epsilon_frac") epsilon_frac = to_double(key, v);
  else if (key == "max_iterations") max_iterations = to_int(key, v);
  else if (key == "morph_radius") morph_radius = to_int(key, v);
  else if (key == "boundary_radius") boundary_radius = to_int(key, v);
  else if (key == "band_width") band_width = to_int(key, v);
  else if (key == "max_boundary_rounds") max_boundary_rounds = to_int(key, v);
  else if (key == "transition_width") transition_width = to_int(key, v);
  else if (key == "min_bg_area_frac") min_bg_area_frac = to_double(key, v);
  else if (key == "connectivity") {
    if (v == "four" || v == "4") connectivity = Connectivity::four;
    else if (v == "eight" || v == "8") connectivity = Connectivity::eight;
    else throw ConfigError("config connectivity: expected four or eight");
  } else if (key == "background") {
    background = BackgroundFill::solid(parse_rgb(key, v));
    background_image.clear();
  } else if (key == "background_image") {
    try {
      background = BackgroundFill::image(load_image(v));
    } catch (const std::exception& e) {
      throw ConfigError("config background_image: " + std::string(e.what()));
    }
    background_image = v;
  } else if (key == "keep_expanded_canvas") keep_expanded_canvas = to_bool(key, v);
  else if (key == "self_overlap_iou") self_overlap_iou = to_double(key, v);
  else if (key == "inpaint_seed") {
    try {
      inpaint_seed = std::stoull(v);
    } catch (const std::exception&) {
      throw ConfigError("config inpaint_seed: expected unsigned integer");
    }
  } else if (key == "amodal_tolerance") amodal_tolerance = to_int(key, v);
  else if (key == "amodal_resegment") amodal_resegment = to_bool(key, v);
  else if (key == "skip_nonadjacent") skip_nonadjacent = to_bool(key, v);
  else if (key == "parallelism") parallelism = to_int(key, v);
  else if (key == "prompt_template") prompt_template = v;
  else throw ConfigError("unknown config key '" + key + "'");
}

std::map<std::string, std::string> PipelineConfig::to_map() const {
  std::map<std::string, std::string> m;
  m["epsilon_frac"] = fmt_double(epsilon_frac);
  m["max_iterations"] = std::to_string(max_iterations);
  m["morph_radius"] = std::to_string(morph_radius);
  m["boundary_radius"] = std::to_string(boundary_radius);
  m["band_width"] = std::to_string(band_width);
  m["max_boundary_rounds"] = std::to_string(max_boundary_rounds);
  m["transition_width"] = std::to_string(transition_width);
  m["min_bg_area_frac"] = fmt_double(min_bg_area_frac);
  m["connectivity"] = connectivity == Connectivity::eight ? "eight" : "four";
  if (background.is_solid()) {
    const Rgb c = background.solid_color();
    m["background"] = std::to_string(c[0]) + "," + std::to_string(c[1]) + "," +
                      std::to_string(c[2]);
  } else {
    m["background_image"] = background_image;
  }
  m["keep_expanded_canvas"] = keep_expanded_canvas ? "true" : "false";
  m["self_overlap_iou"] = fmt_double(self_overlap_iou);
  m["inpaint_seed"] = std::to_string(inpaint_seed);
  m["amodal_tolerance"] = std::to_string(amodal_tolerance);
  m["amodal_resegment"] = amodal_resegment ? "true" : "false";
  m["skip_nonadjacent"] = skip_nonadjacent ? "true" : "false";
  m["parallelism"] = std::to_string(parallelism);
  m["prompt_template"] = prompt_template;
  return m;
}

void apply_config_text(PipelineConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

PipelineConfig load_config_file(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(base, ss.str());
  base.validate();
  return base;
}

nlohmann::json to_json(const PipelineConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : cfg.to_map()) j[k] = v;
  return j;
}

std::string format_prompt(const std::string& tmpl, const std::string& descriptor) {
  const auto pos = tmpl.find("{}");
  if (pos == std::string::npos) return tmpl + " " + descriptor;
  return tmpl.substr(0, pos) + descriptor + tmpl.substr(pos + 2);
}

}  // namespace amodal
