#include "vmirror/records.hpp"

#include <cmath>
#include <set>

#include "json.hpp"
#include "vmirror/error.hpp"

namespace vmirror {

using nlohmann::json;

namespace {

json label_json(const MakeupLabel& l) {
  return {{"eyeshadow_template", l.eyeshadow_template},
          {"eyeshadow_color", l.eyeshadow_color},
          {"lip_color", l.lip_color},
          {"foundation_color", l.foundation_color}};
}

json palette_json(const Palette& p) {
  json out = json::array();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Lab& c = p.centers[i];
    out.push_back({{"index", i}, {"hex", to_hex(lab_to_srgb(c))}, {"lab", {c.L, c.a, c.b}}});
  }
  return out;
}

[[noreturn]] void bad(const std::string& message) { fail(ErrorKind::validation, "landmarks: " + message); }

}  // namespace

std::string format_cards(const std::vector<RecommendationCard>& cards) {
  json out = json::array();
  for (const auto& c : cards) {
    out.push_back({{"rank", c.rank},
                   {"label", label_json(c.label)},
                   {"attributes", c.attributes.describe()},
                   {"score", c.score},
                   {"template_id", c.template_id},
                   {"colors",
                    {{"eyeshadow", to_hex(lab_to_srgb(c.eyeshadow))},
                     {"lip", to_hex(lab_to_srgb(c.lip))},
                     {"foundation", to_hex(lab_to_srgb(c.foundation))}}}});
  }
  return out.dump();
}

std::string format_catalog(const MakeupDB& db) {
  json templates = json::array();
  for (const auto& t : db.templates) {
    templates.push_back({{"id", t.id},
                         {"mean_color", to_hex(lab_to_srgb(t.mean_color))},
                         {"thumbnail", "/api/templates/" + std::to_string(t.id) + ".png"}});
  }
  return json{{"templates", templates},
              {"eyeshadow", palette_json(db.eyeshadow)},
              {"lip", palette_json(db.lip)},
              {"foundation", palette_json(db.foundation)}}
      .dump();
}

std::string format_landmarks_json(const LandmarkSet& lm) {
  json pts = json::array();
  for (const auto& p : lm.points) pts.push_back({p.x, p.y});
  return json{{"schema", LandmarkSet::kSchema},
              {"image_width", lm.image_width},
              {"image_height", lm.image_height},
              {"confidence", lm.confidence},
              {"points", pts}}
      .dump();
}

LandmarkSet parse_landmarks_json(const std::string& text, int image_width, int image_height) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    bad(std::string("malformed JSON (") + e.what() + ")");
  }
  if (!j.is_object()) bad("document must be an object");
  static const std::set<std::string> known = {"schema", "image_width", "image_height", "confidence", "points"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) bad("unknown key '" + key + "'");
  }
  if (j.contains("schema") && j["schema"] != LandmarkSet::kSchema) {
    bad("unsupported schema " + j["schema"].dump() + ", expected contour68");
  }
  LandmarkSet lm;
  lm.image_width = image_width;
  lm.image_height = image_height;
  for (auto [key, expected] : {std::pair{"image_width", image_width}, std::pair{"image_height", image_height}}) {
    if (!j.contains(key)) continue;
    if (!j[key].is_number_integer() || j[key].get<int>() != expected) {
      bad(std::string(key) + " " + j[key].dump() + " does not match the image (" + std::to_string(expected) + ")");
    }
  }
  if (j.contains("confidence")) {
    if (!j["confidence"].is_number()) bad("confidence must be a number");
    lm.confidence = j["confidence"].get<double>();
  }
  if (!j.contains("points") || !j["points"].is_array()) bad("missing 'points' array");
  const json& pts = j["points"];
  if (pts.size() != LandmarkSet::kPointCount) {
    fail(ErrorKind::validation, "expected 68 points, got " + std::to_string(pts.size()));
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const json& p = pts[i];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      bad("point " + std::to_string(i) + " must be [x, y]");
    }
    lm.points[i] = {p[0].get<double>(), p[1].get<double>()};
  }
  lm.validate();
  return lm;
}

}  // namespace vmirror
