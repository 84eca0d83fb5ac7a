#include "vmirror/config.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include "json.hpp"
#include "vmirror/error.hpp"
#include "vmirror/hash.hpp"
#include "vmirror/png_io.hpp"

namespace vmirror {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what, const std::string& message) {
  fail(ErrorKind::validation, what + ": " + message);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Reads one JSON object strictly: every key must be claimed by a field.
class Section {
 public:
  Section(const json& obj, std::string path, std::string what) : obj_(obj), path_(std::move(path)), what_(std::move(what)) {
    if (!obj_.is_object()) bad(what_, "'" + (path_.empty() ? std::string("<root>") : path_) + "' must be an object");
  }

  // Call after all fields are read.
  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!claimed_.contains(key)) bad(what_, "unknown key '" + join(path_, key) + "'");
    }
  }

  const json* find(const std::string& key) {
    claimed_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number() || !std::isfinite(v->get<double>())) bad(what_, "'" + join(path_, key) + "' must be a number");
      out = v->get<double>();
    }
  }

  void integer(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) bad(what_, "'" + join(path_, key) + "' must be an integer");
      const auto x = v->get<std::int64_t>();
      if (x < INT32_MIN || x > INT32_MAX) bad(what_, "'" + join(path_, key) + "' out of range");
      out = static_cast<int>(x);
    }
  }

  void unsigned_integer(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) bad(what_, "'" + join(path_, key) + "' must be a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void size(const std::string& key, std::size_t& out) {
    std::uint64_t x = out;
    unsigned_integer(key, x);
    out = static_cast<std::size_t>(x);
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) bad(what_, "'" + join(path_, key) + "' must be a string");
      out = v->get<std::string>();
    }
  }

  void path(const std::string& key, fs::path& out) {
    std::string s = out.string();
    string(key, s);
    out = s;
  }

  std::string child(const std::string& key) const { return join(path_, key); }

 private:
  const json& obj_;
  std::string path_;
  std::string what_;
  std::set<std::string> claimed_;
};

void read_matting(const json& j, const std::string& path, MattingConfig& m) {
  Section s(j, path, "config");
  s.integer("window_radius", m.window_radius);
  s.number("epsilon", m.epsilon);
  s.integer("eigenvectors", m.eigenvectors);
  s.integer("components", m.components);
  s.number("min_chroma_contrast", m.min_chroma_contrast);
  s.number("ring_distance", m.ring_distance);
  s.number("working_scale", m.working_scale);
  s.unsigned_integer("seed", m.seed);
  s.finish();
}

void read_config(const json& j, AppConfig& c) {
  Section root(j, "", "config");
  const json* version = root.find("version");
  if (!version) bad("config", "missing 'version'");
  if (!version->is_number_integer() || version->get<int>() != kConfigSchemaVersion) {
    fail(ErrorKind::schema, "config: schema version " + version->dump() + " not supported (expected " +
                                std::to_string(kConfigSchemaVersion) + ")");
  }
  if (const json* f = root.find("filter")) {
    Section s(*f, "filter", "config");
    s.number("detector_confidence", c.filter.detector_confidence);
    s.number("landmark_confidence", c.filter.landmark_confidence);
    s.number("min_face_size", c.filter.min_face_size);
    s.number("min_interocular", c.filter.min_interocular);
    s.number("min_frontality", c.filter.min_frontality);
    s.finish();
  }
  if (const json* b = root.find("build")) {
    Section s(*b, "build", "config");
    if (const json* m = s.find("matting")) read_matting(*m, s.child("matting"), c.build.matting);
    s.integer("foundation_k", c.build.foundation_k);
    s.integer("eyeshadow_k", c.build.eyeshadow_k);
    s.integer("lip_k", c.build.lip_k);
    s.integer("max_templates", c.build.max_templates);
    s.number("feather", c.build.feather);
    s.unsigned_integer("seed", c.build.seed);
    s.finish();
  }
  if (const json* t = root.find("train")) {
    Section s(*t, "train", "config");
    s.number("C", c.train.C);
    s.integer("outer_iterations", c.train.outer_iterations);
    s.integer("inner_epochs", c.train.inner_epochs);
    s.unsigned_integer("seed", c.train.seed);
    s.number("tolerance", c.train.tolerance);
    s.finish();
  }
  if (const json* t = root.find("synthesis")) {
    Section s(*t, "synthesis", "config");
    s.number("foundation_chroma", c.synthesis.foundation_chroma);
    s.number("eyeshadow_lightness", c.synthesis.eyeshadow_lightness);
    s.number("lip_lightness", c.synthesis.lip_lightness);
    s.number("smoothing_radius", c.synthesis.smoothing_radius);
    s.number("smoothing_eps", c.synthesis.smoothing_eps);
    s.number("feather", c.synthesis.feather);
    s.finish();
  }
  if (const json* t = root.find("service")) {
    Section s(*t, "service", "config");
    s.string("host", c.service.host);
    s.integer("port", c.service.port);
    s.path("model", c.service.model);
    s.path("db", c.service.db);
    s.string("provider_url", c.service.provider_url);
    s.integer("workers", c.service.workers);
    s.size("max_upload_bytes", c.service.max_upload_bytes);
    s.path("store_dir", c.service.store_dir);
    s.finish();
  }
  root.finish();
}

json to_json(const AppConfig& c) {
  const auto& m = c.build.matting;
  return {
      {"version", kConfigSchemaVersion},
      {"filter",
       {{"detector_confidence", c.filter.detector_confidence},
        {"landmark_confidence", c.filter.landmark_confidence},
        {"min_face_size", c.filter.min_face_size},
        {"min_interocular", c.filter.min_interocular},
        {"min_frontality", c.filter.min_frontality}}},
      {"build",
       {{"matting",
         {{"window_radius", m.window_radius},
          {"epsilon", m.epsilon},
          {"eigenvectors", m.eigenvectors},
          {"components", m.components},
          {"min_chroma_contrast", m.min_chroma_contrast},
          {"ring_distance", m.ring_distance},
          {"working_scale", m.working_scale},
          {"seed", m.seed}}},
        {"foundation_k", c.build.foundation_k},
        {"eyeshadow_k", c.build.eyeshadow_k},
        {"lip_k", c.build.lip_k},
        {"max_templates", c.build.max_templates},
        {"feather", c.build.feather},
        {"seed", c.build.seed}}},
      {"train",
       {{"C", c.train.C},
        {"outer_iterations", c.train.outer_iterations},
        {"inner_epochs", c.train.inner_epochs},
        {"seed", c.train.seed},
        {"tolerance", c.train.tolerance}}},
      {"synthesis",
       {{"foundation_chroma", c.synthesis.foundation_chroma},
        {"eyeshadow_lightness", c.synthesis.eyeshadow_lightness},
        {"lip_lightness", c.synthesis.lip_lightness},
        {"smoothing_radius", c.synthesis.smoothing_radius},
        {"smoothing_eps", c.synthesis.smoothing_eps},
        {"feather", c.synthesis.feather}}},
      {"service",
       {{"host", c.service.host},
        {"port", c.service.port},
        {"model", c.service.model.string()},
        {"db", c.service.db.string()},
        {"provider_url", c.service.provider_url},
        {"workers", c.service.workers},
        {"max_upload_bytes", c.service.max_upload_bytes},
        {"store_dir", c.service.store_dir.string()}}},
  };
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    bad(what, std::string("malformed JSON (") + e.what() + ")");
  }
}

void unit(double v, const std::string& name) {
  if (!(v >= 0.0 && v <= 1.0)) bad("config", "'" + name + "' must lie in [0, 1]");
}

void positive(double v, const std::string& name) {
  if (!(v > 0.0)) bad("config", "'" + name + "' must be positive");
}

}  // namespace

void AppConfig::validate() const {
  unit(filter.detector_confidence, "filter.detector_confidence");
  unit(filter.landmark_confidence, "filter.landmark_confidence");
  unit(filter.min_frontality, "filter.min_frontality");
  if (filter.min_face_size < 0) bad("config", "'filter.min_face_size' must be non-negative");
  if (filter.min_interocular < 0) bad("config", "'filter.min_interocular' must be non-negative");

  const auto& m = build.matting;
  if (m.window_radius < 1) bad("config", "'build.matting.window_radius' must be at least 1");
  positive(m.epsilon, "build.matting.epsilon");
  if (m.eigenvectors < 2) bad("config", "'build.matting.eigenvectors' must be at least 2");
  if (m.components < 1 || m.components > m.eigenvectors) {
    bad("config", "'build.matting.components' must lie in [1, eigenvectors]");
  }
  if (!(m.working_scale > 0.0 && m.working_scale <= 1.0)) bad("config", "'build.matting.working_scale' must lie in (0, 1]");
  if (m.ring_distance < 0) bad("config", "'build.matting.ring_distance' must be non-negative");
  for (auto [k, name] : {std::pair{build.foundation_k, "foundation_k"}, std::pair{build.eyeshadow_k, "eyeshadow_k"},
                         std::pair{build.lip_k, "lip_k"}, std::pair{build.max_templates, "max_templates"}}) {
    if (k < 1) bad("config", "'build." + std::string(name) + "' must be at least 1");
  }
  if (build.feather < 0) bad("config", "'build.feather' must be non-negative");

  positive(train.C, "train.C");
  if (train.outer_iterations < 1) bad("config", "'train.outer_iterations' must be at least 1");
  if (train.inner_epochs < 1) bad("config", "'train.inner_epochs' must be at least 1");
  if (train.tolerance < 0) bad("config", "'train.tolerance' must be non-negative");

  unit(synthesis.foundation_chroma, "synthesis.foundation_chroma");
  unit(synthesis.eyeshadow_lightness, "synthesis.eyeshadow_lightness");
  unit(synthesis.lip_lightness, "synthesis.lip_lightness");
  if (synthesis.smoothing_radius < 0) bad("config", "'synthesis.smoothing_radius' must be non-negative");
  positive(synthesis.smoothing_eps, "synthesis.smoothing_eps");
  if (synthesis.feather < 0) bad("config", "'synthesis.feather' must be non-negative");

  if (service.port < 0 || service.port > 65535) bad("config", "'service.port' must lie in [0, 65535]");
  if (service.workers < 1) bad("config", "'service.workers' must be at least 1");
  if (service.max_upload_bytes < 1) bad("config", "'service.max_upload_bytes' must be positive");
}

AppConfig parse_config(const std::string& text) {
  AppConfig c;
  read_config(parse_json(text, "config"), c);
  c.validate();
  return c;
}

AppConfig load_config(const fs::path& path) {
  std::string text;
  try {
    const auto bytes = read_file(path);
    text.assign(bytes.begin(), bytes.end());
  } catch (const Error& e) {
    fail(ErrorKind::io, "config: cannot read " + path.string());
  }
  try {
    return parse_config(text);
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(e.what()) + " (" + path.string() + ")");
  }
}

std::string format_config(const AppConfig& config) { return to_json(config).dump(2) + "\n"; }

namespace {

json* lookup(json& doc, const std::string& key) {
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(part) || part == "version") bad("config", "unknown key '" + key + "'");
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (node->is_object()) bad("config", "'" + key + "' is a section, not a value");
  return node;
}

}  // namespace

void set_config_value(AppConfig& config, const std::string& key, const std::string& json_value) {
  json doc = to_json(config);
  json* node = lookup(doc, key);
  // String-valued keys (paths, host, URL) take the text as given.
  if (node->is_string()) {
    *node = json_value;
  } else {
    *node = parse_json(json_value, "config value for '" + key + "'");
  }
  AppConfig next;
  read_config(doc, next);
  next.validate();
  config = std::move(next);
}

std::string get_config_value(const AppConfig& config, const std::string& key) {
  json doc = to_json(config);
  const json* node = lookup(doc, key);
  return node->is_string() ? node->get<std::string>() : node->dump();
}

// ---- synthesis requests ----

namespace {

ColorChoice read_color(const json& v, const std::string& key) {
  ColorChoice c;
  if (v.is_number_integer()) {
    c.palette_index = v.get<int>();
  } else if (v.is_string()) {
    c.lab = srgb_to_lab(parse_hex(v.get<std::string>()));
  } else if (v.is_array() && v.size() == 3 && v[0].is_number() && v[1].is_number() && v[2].is_number()) {
    c.lab = {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
    if (!std::isfinite(c.lab.L) || !std::isfinite(c.lab.a) || !std::isfinite(c.lab.b) || c.lab.L < 0 || c.lab.L > 100) {
      bad("synthesis request", "'" + key + "' is not a valid Lab colour");
    }
  } else {
    bad("synthesis request", "'" + key + "' must be a palette index, a hex colour or [L, a, b]");
  }
  return c;
}

Lab pick(const ColorChoice& c, const Palette* palette, const std::string& key) {
  if (!c.palette_index) return c.lab;
  if (!palette) bad("synthesis request", "'" + key + "' names a palette index but no DB is loaded");
  const int i = *c.palette_index;
  if (i < 0 || i >= static_cast<int>(palette->size())) {
    bad("synthesis request", "'" + key + "' index " + std::to_string(i) + " out of range [0, " +
                                 std::to_string(palette->size()) + ")");
  }
  return palette->centers[i];
}

std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

SynthesisRequest parse_synthesis_request(const std::string& text) {
  const json j = parse_json(text, "synthesis request");
  SynthesisRequest r;
  Section s(j, "", "synthesis request");
  if (const json* v = s.find("version")) {
    if (!v->is_number_integer() || v->get<int>() != 1) {
      fail(ErrorKind::schema, "synthesis request: version " + v->dump() + " not supported (expected 1)");
    }
  }
  if (const json* l = s.find("label")) {
    Section ls(*l, "label", "synthesis request");
    MakeupLabel label;
    const char* keys[] = {"eyeshadow_template", "eyeshadow_color", "lip_color", "foundation_color"};
    int* slots[] = {&label.eyeshadow_template, &label.eyeshadow_color, &label.lip_color, &label.foundation_color};
    for (int i = 0; i < 4; ++i) {
      if (!ls.find(keys[i])) bad("synthesis request", std::string("missing 'label.") + keys[i] + "'");
      ls.integer(keys[i], *slots[i]);
    }
    ls.finish();
    r.label = label;
  }
  if (const json* t = s.find("template")) {
    if (t->is_number_integer()) {
      r.template_id = t->get<int>();
    } else if (t->is_string() && !t->get<std::string>().empty()) {
      r.template_path = t->get<std::string>();
    } else {
      bad("synthesis request", "'template' must be a template id or a PNG path");
    }
  }
  if (const json* v = s.find("eyeshadow_color")) r.eyeshadow = read_color(*v, "eyeshadow_color");
  if (const json* v = s.find("lip_color")) r.lip = read_color(*v, "lip_color");
  if (const json* v = s.find("foundation_color")) r.foundation = read_color(*v, "foundation_color");
  if (const json* v = s.find("intensities")) {
    Section is(*v, "intensities", "synthesis request");
    is.number("foundation", r.intensities.foundation);
    is.number("eyeshadow", r.intensities.eyeshadow);
    is.number("lip", r.intensities.lip);
    is.finish();
  }
  s.finish();

  const bool explicit_any = r.template_id || !r.template_path.empty() || r.eyeshadow || r.lip || r.foundation;
  if (r.label && explicit_any) bad("synthesis request", "give either 'label' or explicit slots, not both");
  if (!r.label) {
    if (!r.template_id && r.template_path.empty()) bad("synthesis request", "missing 'template'");
    if (!r.eyeshadow) bad("synthesis request", "missing 'eyeshadow_color'");
    if (!r.lip) bad("synthesis request", "missing 'lip_color'");
    if (!r.foundation) bad("synthesis request", "missing 'foundation_color'");
  }
  for (auto [v, name] : {std::pair{r.intensities.foundation, "foundation"}, std::pair{r.intensities.eyeshadow, "eyeshadow"},
                         std::pair{r.intensities.lip, "lip"}}) {
    if (!(v >= 0.0 && v <= 1.0)) bad("synthesis request", std::string("intensity '") + name + "' must lie in [0, 1]");
  }
  return r;
}

MakeupSpec resolve_synthesis_request(const SynthesisRequest& request, const MakeupDB* db, const fs::path& base_dir,
                                     bool allow_paths) {
  MakeupSpec spec;
  spec.intensities = request.intensities;
  if (request.label) {
    if (!db) bad("synthesis request", "'label' requires a DB");
    const LabelSpace space = db->label_space();
    if (!space.contains(*request.label)) {
      bad("synthesis request", "label " + to_string(*request.label) + " outside the catalog");
    }
    spec.template_alpha = db->templates[request.label->eyeshadow_template].alpha;
    spec.eyeshadow_color = db->eyeshadow.centers[request.label->eyeshadow_color];
    spec.lip_color = db->lip.centers[request.label->lip_color];
    spec.foundation_color = db->foundation.centers[request.label->foundation_color];
  } else {
    if (request.template_id) {
      if (!db) bad("synthesis request", "'template' names a template id but no DB is loaded");
      const int t = *request.template_id;
      if (t < 0 || t >= static_cast<int>(db->templates.size())) {
        bad("synthesis request", "template id " + std::to_string(t) + " out of range [0, " +
                                     std::to_string(db->templates.size()) + ")");
      }
      spec.template_alpha = db->templates[t].alpha;
    } else {
      if (!allow_paths) bad("synthesis request", "template paths are not accepted here");
      const fs::path p = request.template_path.is_absolute() ? request.template_path : base_dir / request.template_path;
      const Image8 img = read_png(p);
      if (img.channels != 1) bad("synthesis request", "template " + p.string() + " must be a grayscale PNG");
      spec.template_alpha = to_working(img);
    }
    spec.eyeshadow_color = pick(*request.eyeshadow, db ? &db->eyeshadow : nullptr, "eyeshadow_color");
    spec.lip_color = pick(*request.lip, db ? &db->lip : nullptr, "lip_color");
    spec.foundation_color = pick(*request.foundation, db ? &db->foundation : nullptr, "foundation_color");
  }
  spec.validate();
  return spec;
}

std::string spec_digest(const MakeupSpec& spec) {
  std::string s = "vmirror-spec 1\n";
  for (const Lab& c : {spec.eyeshadow_color, spec.lip_color, spec.foundation_color}) {
    s += fmt(c.L) + " " + fmt(c.a) + " " + fmt(c.b) + "\n";
  }
  s += fmt(spec.intensities.foundation) + " " + fmt(spec.intensities.eyeshadow) + " " + fmt(spec.intensities.lip) + "\n";
  s += std::to_string(spec.template_alpha.width()) + "x" + std::to_string(spec.template_alpha.height()) + "\n";
  for (double v : spec.template_alpha.data()) s += fmt(v) + "\n";
  return sha256_hex(s);
}

}  // namespace vmirror
