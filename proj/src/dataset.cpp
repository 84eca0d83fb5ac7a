#include "vmirror/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "vmirror/error.hpp"
#include "vmirror/png_io.hpp"
#include "vmirror/recommender.hpp"

namespace vmirror {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::set<std::string> kManifestKeys = {"id",     "image",  "landmarks", "detector_confidence",
                                             "landmark_confidence", "width", "height"};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

std::vector<ManifestEntry> parse_manifest(const std::string& text, const fs::path& base_dir) {
  std::vector<ManifestEntry> out;
  std::set<std::string> ids;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto bad = [&](const std::string& why) -> void {
      fail(ErrorKind::validation, "manifest line " + std::to_string(line_no) + ": " + why);
    };
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      bad(e.what());
    }
    if (!j.is_object()) bad("expected an object");
    for (const auto& [key, value] : j.items()) {
      if (!kManifestKeys.count(key)) bad("unknown key '" + key + "'");
    }
    ManifestEntry e;
    try {
      e.id = j.at("id").get<std::string>();
      e.image = resolve(base_dir, j.at("image").get<std::string>());
      e.landmarks = resolve(base_dir, j.at("landmarks").get<std::string>());
      e.detector_confidence = j.at("detector_confidence").get<double>();
      e.landmark_confidence = j.at("landmark_confidence").get<double>();
      e.width = j.at("width").get<int>();
      e.height = j.at("height").get<int>();
    } catch (const json::exception& ex) {
      bad(ex.what());
    }
    if (e.id.empty() || e.image.empty() || e.landmarks.empty()) bad("id and paths must be non-empty");
    if (!(e.detector_confidence >= 0.0 && e.detector_confidence <= 1.0) ||
        !(e.landmark_confidence >= 0.0 && e.landmark_confidence <= 1.0)) {
      bad("confidences must lie in [0, 1]");
    }
    if (e.width <= 0 || e.height <= 0) bad("dimensions must be positive");
    if (!ids.insert(e.id).second) bad("duplicate id '" + e.id + "'");
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_manifest(std::string(bytes.begin(), bytes.end()), path.parent_path());
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::string format_manifest_entry(const ManifestEntry& e, const fs::path& base_dir) {
  auto rel = [&](const fs::path& p) {
    if (base_dir.empty()) return p.generic_string();
    const fs::path r = p.lexically_relative(base_dir);
    return r.empty() || *r.begin() == ".." ? p.generic_string() : r.generic_string();
  };
  json j = {{"id", e.id},
            {"image", rel(e.image)},
            {"landmarks", rel(e.landmarks)},
            {"detector_confidence", e.detector_confidence},
            {"landmark_confidence", e.landmark_confidence},
            {"width", e.width},
            {"height", e.height}};
  return j.dump();
}

std::map<std::string, int> FilterResult::reason_counts() const {
  std::map<std::string, int> counts;
  for (const auto& r : rejected) ++counts[r.reason];
  return counts;
}

double frontality(const LandmarkSet& lm) {
  const Point bridge = lm.points[27];
  const double l = norm(lm.centroid(Contour::left_eye) - bridge);
  const double r = norm(lm.centroid(Contour::right_eye) - bridge);
  const double hi = std::max(l, r);
  return hi > 0.0 ? std::min(l, r) / hi : 0.0;
}

FilterResult filter_manifest(const std::vector<ManifestEntry>& entries, const FilterThresholds& t,
                             const std::set<std::string>* allowlist) {
  FilterResult result;
  for (const auto& e : entries) {
    auto reject = [&](const std::string& why, const std::string& detail) {
      result.rejected.push_back({e, why, detail});
    };
    if (e.detector_confidence < t.detector_confidence) {
      reject(reason::detector, std::to_string(e.detector_confidence));
      continue;
    }
    if (e.landmark_confidence < t.landmark_confidence) {
      reject(reason::landmark, std::to_string(e.landmark_confidence));
      continue;
    }
    LandmarkSet lm;
    try {
      if (!fs::is_regular_file(e.image)) fail(ErrorKind::io, "missing image " + e.image.string());
      lm = read_landmarks(e.landmarks);
      if (lm.image_width != e.width || lm.image_height != e.height) {
        fail(ErrorKind::validation, "landmark image size differs from the manifest");
      }
    } catch (const Error& err) {
      reject(reason::io, err.what());
      continue;
    }
    double minx = 1e300, miny = 1e300, maxx = -1e300, maxy = -1e300;
    for (const auto& p : lm.points) {
      minx = std::min(minx, p.x);
      maxx = std::max(maxx, p.x);
      miny = std::min(miny, p.y);
      maxy = std::max(maxy, p.y);
    }
    const double face = std::min(maxx - minx, maxy - miny);
    if (face < t.min_face_size) {
      reject(reason::face_size, std::to_string(face));
      continue;
    }
    if (lm.interocular() < t.min_interocular) {
      reject(reason::interocular, std::to_string(lm.interocular()));
      continue;
    }
    const double f = frontality(lm);
    if (f < t.min_frontality) {
      reject(reason::frontality, std::to_string(f));
      continue;
    }
    if (allowlist && !allowlist->count(e.id)) {
      reject(reason::allowlist, "");
      continue;
    }
    result.accepted.push_back(e);
  }
  return result;
}

std::set<std::string> read_allowlist(const fs::path& path) {
  const auto bytes = read_file(path);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::set<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    const auto a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos || line[a] == '#') continue;
    const auto b = line.find_last_not_of(" \t\r");
    ids.insert(line.substr(a, b - a + 1));
  }
  return ids;
}

std::string format_filter_report(const std::vector<ManifestEntry>& entries, const FilterResult& result) {
  std::map<std::string, const Rejection*> rejected;
  for (const auto& r : result.rejected) rejected[r.entry.id] = &r;
  std::string out;
  for (const auto& e : entries) {
    const auto it = rejected.find(e.id);
    if (it == rejected.end()) {
      out += json{{"id", e.id}, {"status", "accepted"}}.dump() + "\n";
    } else {
      const Rejection& r = *it->second;
      out += json{{"id", e.id}, {"status", "rejected"}, {"reason", r.reason}, {"detail", r.detail}}.dump() + "\n";
    }
  }
  json reasons = json::object();
  for (const auto& [k, v] : result.reason_counts()) reasons[k] = v;
  const json summary = {{"total", entries.size()},
                        {"accepted", result.accepted.size()},
                        {"rejected", result.rejected.size()},
                        {"reasons", reasons}};
  return out + json{{"summary", summary}}.dump() + "\n";
}

RegionSamples region_samples(const Image& rgb, const LandmarkSet& lm, double feather) {
  const RegionMasks m = region_masks(lm, rgb.width(), rgb.height(), feather);
  const Image lab = rgb_to_lab_image(rgb);
  auto weighted = [&](auto weight, const char* what) {
    double mass = 0, L = 0, a = 0, b = 0;
    for (std::size_t i = 0; i < lab.pixel_count(); ++i) {
      const double w = weight(i);
      if (w <= 0) continue;
      mass += w;
      L += w * lab.data()[3 * i];
      a += w * lab.data()[3 * i + 1];
      b += w * lab.data()[3 * i + 2];
    }
    if (mass <= 0) fail(ErrorKind::validation, std::string("empty ") + what + " region");
    return Lab{L / mass, a / mass, b / mass};
  };
  RegionSamples s;
  s.foundation = weighted(
      [&](std::size_t i) {
        const int zone = std::max(m.left_eye_shadow_zone.data[i], m.right_eye_shadow_zone.data[i]);
        return m.skin.data[i] / 255.0 * (1.0 - zone / 255.0);
      },
      "skin");
  s.lip = weighted([&](std::size_t i) { return m.lips.data[i] / 255.0; }, "lip");
  return s;
}

MakeupDB build_db(const std::vector<ManifestEntry>& accepted, const BuildConfig& config, BuildReport* report) {
  if (accepted.empty()) fail(ErrorKind::validation, "build_db: no accepted images");
  if (config.foundation_k < 1 || config.eyeshadow_k < 1 || config.lip_k < 1 || config.max_templates < 1) {
    fail(ErrorKind::validation, "build_db: palette sizes and the template cap must be >= 1");
  }
  BuildReport local;
  BuildReport& rep = report ? *report : local;
  rep = {};

  struct Analyzed {
    std::string id;
    EyeShadowTemplate tmpl;
    RegionSamples samples;
    FeatureVector features;
  };
  std::vector<Analyzed> ok;
  for (const auto& e : accepted) {
    ++rep.analyzed;
    try {
      const Image rgb = to_working(read_png(e.image));
      const LandmarkSet lm = read_landmarks(e.landmarks);
      if (lm.image_width != rgb.width() || lm.image_height != rgb.height()) {
        fail(ErrorKind::validation, "landmarks do not match the image size");
      }
      if (rgb.channels() != 3) fail(ErrorKind::validation, "expected a colour image");
      Analyzed a;
      a.id = e.id;
      a.tmpl = extract_eyeshadow_template(rgb, lm, config.matting, -1, e.id);
      a.samples = region_samples(rgb, lm, config.feather);
      a.features = extract_features(rgb, lm);
      ok.push_back(std::move(a));
    } catch (const Error& err) {
      rep.failures.push_back({e.id, err.what()});
    }
  }
  const int need = std::max({config.foundation_k, config.eyeshadow_k, config.lip_k});
  if (static_cast<int>(ok.size()) < need) {
    std::string msg = "build_db: only " + std::to_string(ok.size()) + " usable images, need " +
                      std::to_string(need);
    for (const auto& f : rep.failures) msg += "\n  " + f.image_id + ": " + f.message;
    fail(ErrorKind::validation, msg);
  }

  MakeupDB db;
  std::vector<Lab> found, shadow, lip;
  for (const auto& a : ok) {
    found.push_back(a.samples.foundation);
    shadow.push_back(a.tmpl.mean_color);
    lip.push_back(a.samples.lip);
  }
  db.foundation = build_palette(found, ProductClass::foundation, config.foundation_k, config.seed);
  db.eyeshadow = build_palette(shadow, ProductClass::eyeshadow, config.eyeshadow_k, config.seed);
  db.lip = build_palette(lip, ProductClass::lip, config.lip_k, config.seed);

  // Templates: all of them under the cap, else one medoid per k-means cluster.
  std::vector<std::size_t> chosen;
  if (static_cast<int>(ok.size()) <= config.max_templates) {
    for (std::size_t i = 0; i < ok.size(); ++i) chosen.push_back(i);
  } else {
    const std::size_t dim = ok[0].tmpl.alpha.pixel_count();
    std::vector<double> points;
    points.reserve(dim * ok.size());
    for (const auto& a : ok) points.insert(points.end(), a.tmpl.alpha.data().begin(), a.tmpl.alpha.data().end());
    const KMeansResult km = kmeans(points, static_cast<int>(dim), config.max_templates, config.seed);
    for (int c = 0; c < km.k(); ++c) {
      double best = 1e300;
      std::size_t pick = ok.size();
      for (std::size_t i = 0; i < ok.size(); ++i) {
        if (km.assignments[i] != c) continue;
        double d = 0;
        for (std::size_t j = 0; j < dim; ++j) {
          const double diff = points[i * dim + j] - km.centers[c * dim + j];
          d += diff * diff;
        }
        if (d < best) {
          best = d;
          pick = i;
        }
      }
      if (pick < ok.size()) chosen.push_back(pick);
    }
    std::sort(chosen.begin(), chosen.end());
  }
  for (std::size_t i : chosen) {
    EyeShadowTemplate t = ok[i].tmpl;
    t.id = static_cast<int>(db.templates.size());
    db.templates.push_back(std::move(t));
  }

  for (const auto& a : ok) {
    Annotation ann;
    ann.image_id = a.id;
    ann.features = a.features;
    int best = 0;
    double best_iou = -1;
    for (const auto& t : db.templates) {
      const double iou = alpha_iou(a.tmpl.alpha, t.alpha);
      if (iou > best_iou) {
        best_iou = iou;
        best = t.id;
      }
    }
    ann.label = {best, quantize(a.tmpl.mean_color, db.eyeshadow), quantize(a.samples.lip, db.lip),
                 quantize(a.samples.foundation, db.foundation)};
    db.annotations.push_back(std::move(ann));
  }
  db.validate();
  return db;
}

std::string format_build_report(const MakeupDB& db, const BuildReport& report) {
  std::string out;
  for (const auto& f : report.failures) {
    out += json{{"id", f.image_id}, {"status", "skipped"}, {"message", f.message}}.dump() + "\n";
  }
  json summary = {{"analyzed", report.analyzed},
                  {"annotated", db.annotations.size()},
                  {"skipped", report.failures.size()},
                  {"templates", db.templates.size()},
                  {"palettes", {{"foundation", db.foundation.size()}, {"eyeshadow", db.eyeshadow.size()}, {"lip", db.lip.size()}}}};
  return out + json{{"summary", summary}}.dump() + "\n";
}

}  // namespace vmirror
