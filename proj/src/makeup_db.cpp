#include "vmirror/makeup_db.hpp"

#include "json.hpp"

#include <sstream>

#include "vmirror/error.hpp"
#include "vmirror/png_io.hpp"

namespace vmirror {

using nlohmann::json;

int hamming_loss(const MakeupLabel& a, const MakeupLabel& b) {
  return (a.eyeshadow_template != b.eyeshadow_template) + (a.eyeshadow_color != b.eyeshadow_color) +
         (a.lip_color != b.lip_color) + (a.foundation_color != b.foundation_color);
}

std::string to_string(const MakeupLabel& l) {
  return "template " + std::to_string(l.eyeshadow_template) + ", eyeshadow " + std::to_string(l.eyeshadow_color) +
         ", lip " + std::to_string(l.lip_color) + ", foundation " + std::to_string(l.foundation_color);
}

int LabelSpace::size() const { return templates * eyeshadow_colors * lip_colors * foundation_colors; }

bool LabelSpace::contains(const MakeupLabel& l) const {
  return l.eyeshadow_template >= 0 && l.eyeshadow_template < templates && l.eyeshadow_color >= 0 &&
         l.eyeshadow_color < eyeshadow_colors && l.lip_color >= 0 && l.lip_color < lip_colors &&
         l.foundation_color >= 0 && l.foundation_color < foundation_colors;
}

MakeupLabel LabelSpace::label_at(int index) const {
  if (index < 0 || index >= size()) fail(ErrorKind::validation, "label index out of range");
  MakeupLabel l;
  l.foundation_color = index % foundation_colors;
  index /= foundation_colors;
  l.lip_color = index % lip_colors;
  index /= lip_colors;
  l.eyeshadow_color = index % eyeshadow_colors;
  l.eyeshadow_template = index / eyeshadow_colors;
  return l;
}

int LabelSpace::index_of(const MakeupLabel& l) const {
  if (!contains(l)) fail(ErrorKind::validation, "label outside the label space: " + to_string(l));
  return ((l.eyeshadow_template * eyeshadow_colors + l.eyeshadow_color) * lip_colors + l.lip_color) *
             foundation_colors +
         l.foundation_color;
}

void LabelSpace::validate() const {
  if (templates < 1 || eyeshadow_colors < 1 || lip_colors < 1 || foundation_colors < 1) {
    fail(ErrorKind::validation, "label space sizes must be >= 1");
  }
}

LabelSpace MakeupDB::label_space() const {
  return {static_cast<int>(templates.size()), static_cast<int>(eyeshadow.size()), static_cast<int>(lip.size()), static_cast<int>(foundation.size())};
}

void MakeupDB::validate() const {
  if (schema_version != kDbSchemaVersion) {
    fail(ErrorKind::schema, "makeup db schema version " + std::to_string(schema_version) +
                                " is not supported (expected " + std::to_string(kDbSchemaVersion) + ")");
  }
  if (foundation.product_class != ProductClass::foundation || eyeshadow.product_class != ProductClass::eyeshadow ||
      lip.product_class != ProductClass::lip) {
    fail(ErrorKind::validation, "makeup db palettes have the wrong product classes");
  }
  const LabelSpace space = label_space();
  space.validate();
  for (std::size_t i = 0; i < templates.size(); ++i) {
    if (templates[i].id != static_cast<int>(i)) fail(ErrorKind::validation, "template ids must be 0..T-1 in order");
  }
  for (const auto& a : annotations) {
    if (!space.contains(a.label)) {
      fail(ErrorKind::validation, "annotation for " + a.image_id + " is out of range: " + to_string(a.label));
    }
  }
}

namespace {

constexpr const char* kAnnotationsMagic = "vmirror-annotations";

json annotation_json(const Annotation& a) {
  const auto& l = a.label;
  return json{{"image_id", a.image_id},
              {"label", {l.eyeshadow_template, l.eyeshadow_color, l.lip_color, l.foundation_color}},
              {"features", a.features.values},
              {"skin_valid", a.features.skin_valid}};
}

Annotation parse_annotation(const json& j) {
  Annotation a;
  a.image_id = j.at("image_id").get<std::string>();
  const auto l = j.at("label").get<std::vector<int>>();
  if (l.size() != 4) throw std::runtime_error("label needs 4 indices");
  a.label = {l[0], l[1], l[2], l[3]};
  const auto f = j.at("features").get<std::vector<double>>();
  if (f.size() != kFeatureCount) throw std::runtime_error("expected " + std::to_string(kFeatureCount) + " features");
  std::copy(f.begin(), f.end(), a.features.values.begin());
  a.features.skin_valid = j.at("skin_valid").get<bool>();
  return a;
}

std::string slurp(const std::filesystem::path& p) {
  const auto bytes = read_file(p);
  return std::string(bytes.begin(), bytes.end());
}

}  // namespace

void save_db(const MakeupDB& db, const std::filesystem::path& dir) {
  db.validate();
  std::filesystem::create_directories(dir / "templates");
  for (const auto& t : db.templates) save_template(dir / "templates", t);
  write_text_atomic(dir / "palettes.foundation", format_palette(db.foundation));
  write_text_atomic(dir / "palettes.eyeshadow", format_palette(db.eyeshadow));
  write_text_atomic(dir / "palettes.lip", format_palette(db.lip));
  std::string ann = json{{"schema", kAnnotationsMagic}, {"version", kDbSchemaVersion}}.dump() + "\n";
  for (const auto& a : db.annotations) ann += annotation_json(a).dump() + "\n";
  write_text_atomic(dir / "annotations.jsonl", ann);
  // Written last: a directory without a version file is not a database.
  write_text_atomic(dir / "version", "vmirror-db " + std::to_string(db.schema_version) + "\ntemplates: " +
                                         std::to_string(db.templates.size()) + "\n");
}

MakeupDB load_db(const std::filesystem::path& dir) {
  const auto version_path = dir / "version";
  if (!std::filesystem::exists(version_path)) {
    fail(ErrorKind::not_found, "no makeup db at " + dir.string() + " (missing " + version_path.string() + ")");
  }
  MakeupDB db;
  {
    std::istringstream in(slurp(version_path));
    std::string magic, key;
    int version = 0, count = -1;
    if (!(in >> magic >> version) || magic != "vmirror-db") {
      fail(ErrorKind::validation, "corrupted db record " + version_path.string());
    }
    if (version != kDbSchemaVersion) {
      fail(ErrorKind::schema, version_path.string() + ": makeup db schema version " + std::to_string(version) +
                                  " is not supported (expected " + std::to_string(kDbSchemaVersion) + ")");
    }
    if (!(in >> key >> count) || key != "templates:" || count < 0) {
      fail(ErrorKind::validation, "corrupted db record " + version_path.string());
    }
    for (int i = 0; i < count; ++i) db.templates.push_back(load_template(dir / "templates", i));
  }
  auto palette = [&](const char* name) {
    const auto p = dir / (std::string("palettes.") + name);
    try {
      return parse_palette(slurp(p));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::io) throw;
      throw Error(e.kind(), p.string() + ": " + e.what());
    }
  };
  db.foundation = palette("foundation");
  db.eyeshadow = palette("eyeshadow");
  db.lip = palette("lip");

  const auto ann_path = dir / "annotations.jsonl";
  std::istringstream in(slurp(ann_path));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorKind::validation, ann_path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (line_no == 1) {
      if (!j.is_object() || j.value("schema", "") != kAnnotationsMagic || !j.contains("version")) {
        fail(ErrorKind::validation, "corrupted db record " + ann_path.string() + ": bad header");
      }
      const int v = j["version"].is_number_integer() ? j["version"].get<int>() : -1;
      if (v != kDbSchemaVersion) {
        fail(ErrorKind::schema, ann_path.string() + ": annotation schema version " + std::to_string(v) +
                                    " is not supported (expected " + std::to_string(kDbSchemaVersion) + ")");
      }
      continue;
    }
    try {
      db.annotations.push_back(parse_annotation(j));
    } catch (const std::exception& e) {
      fail(ErrorKind::validation, ann_path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (line_no == 0) fail(ErrorKind::validation, "corrupted db record " + ann_path.string() + ": empty");
  db.validate();
  return db;
}

}  // namespace vmirror
