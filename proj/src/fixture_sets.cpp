#include "vmirror/fixture_sets.hpp"

#include <algorithm>
#include <numeric>

#include "json.hpp"
#include "vmirror/error.hpp"
#include "vmirror/png_io.hpp"
#include "vmirror/rng.hpp"
#include "vmirror/synthetic.hpp"

namespace vmirror {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
  std::string text;
  for (const auto& e : entries) text += format_manifest_entry(e, path.parent_path()) + "\n";
  write_text_atomic(path, text);
}

FaceShape random_shape(Rng& rng, double iod) {
  FaceShape s;
  s.interocular = iod;
  s.center = {256.0 + rng.uniform(-10, 10), 220.0 + rng.uniform(-10, 10)};
  s.rotation = rng.uniform(-0.1, 0.1);
  s.face_width = rng.uniform(1.9, 2.2);
  s.chin_drop = rng.uniform(1.3, 1.5);
  return s;
}

}  // namespace

PlantedManifest write_planted_manifest(const fs::path& dir, std::uint64_t seed, int total, int planted) {
  if (planted > total || planted < 0) fail(ErrorKind::validation, "planted count exceeds the manifest size");
  fs::create_directories(dir / "landmarks");
  const fs::path blank = dir / "blank.png";
  Image8 one{1, 1, 3, {128, 128, 128}};
  write_png(blank, one);

  const std::vector<std::string> rules = {reason::detector, reason::landmark,    reason::io,
                                          reason::face_size, reason::interocular, reason::frontality};
  Rng rng(seed);
  std::vector<int> slots(total);
  std::iota(slots.begin(), slots.end(), 0);
  rng.shuffle(std::span<int>(slots));
  std::vector<std::string> plan(total);
  for (int i = 0; i < planted; ++i) plan[slots[i]] = rules[i % rules.size()];

  PlantedManifest out;
  out.manifest = dir / "manifest.jsonl";
  int io_kind = 0;
  for (int i = 0; i < total; ++i) {
    ManifestEntry e;
    char id[32];
    std::snprintf(id, sizeof id, "img_%03d", i);
    e.id = id;
    e.image = blank;
    e.landmarks = dir / "landmarks" / (e.id + ".lm");
    e.width = 512;
    e.height = 512;
    e.detector_confidence = i % 10 == 0 ? 0.8 : rng.uniform(0.8, 1.0);
    e.landmark_confidence = i % 10 == 5 ? 0.8 : rng.uniform(0.8, 1.0);
    const std::string& plant = plan[i];

    FaceShape shape = random_shape(rng, rng.uniform(130, 170));
    bool write_lm = true;
    LandmarkSet lm;
    if (plant == reason::detector) {
      e.detector_confidence = rng.uniform(0.1, 0.79);
    } else if (plant == reason::landmark) {
      e.landmark_confidence = rng.uniform(0.1, 0.79);
    } else if (plant == reason::face_size) {
      shape.interocular = rng.uniform(40, 55);
    } else if (plant == reason::interocular) {
      shape.interocular = 55;
      shape.face_width = 4.5;
      shape.chin_drop = 4.0;
    }
    lm = make_face_landmarks(shape, e.width, e.height, e.landmark_confidence);
    if (plant == reason::frontality) {
      lm.points[27].x += 0.3 * shape.interocular * std::cos(shape.rotation);
      lm.points[27].y += 0.3 * shape.interocular * std::sin(shape.rotation);
    }
    if (plant == reason::io) {
      switch (io_kind++ % 4) {
        case 0:  // missing landmark file
          write_lm = false;
          break;
        case 1:  // truncated landmark document
          write_text_atomic(e.landmarks, "schema: contour68\nimage_width: 512\nimage_height: 512\npoints: 68\n1 2\n");
          write_lm = false;
          break;
        case 2:  // missing image
          e.image = dir / "missing" / (e.id + ".png");
          break;
        default:  // landmarks for a different image size
          e.width = 640;
          break;
      }
    }
    if (write_lm) write_landmarks(e.landmarks, lm);
    out.expected[e.id] = plant;
    out.entries.push_back(e);
  }
  write_manifest(out.manifest, out.entries);
  return out;
}

LookSet write_look_set(const fs::path& dir, int count, std::uint64_t seed) {
  fs::create_directories(dir / "faces");
  LookSet out;
  out.manifest = dir / "manifest.jsonl";
  const auto specs = look_set(count, seed);
  for (int i = 0; i < count; ++i) {
    const SyntheticFace face = render_face(specs[i]);
    ManifestEntry e;
    char id[32];
    std::snprintf(id, sizeof id, "face_%02d", i);
    e.id = id;
    e.image = dir / "faces" / (e.id + ".png");
    e.landmarks = dir / "faces" / (e.id + ".lm");
    e.width = face.rgb.width();
    e.height = face.rgb.height();
    e.detector_confidence = 0.97;
    e.landmark_confidence = 0.93;
    write_png(e.image, to_8bit(face.rgb));
    write_landmarks(e.landmarks, face.landmarks);
    out.entries.push_back(e);
    out.looks.push_back(i % 3);
  }
  write_manifest(out.manifest, out.entries);
  return out;
}

void write_sample(const fs::path& dir) {
  fs::create_directories(dir);
  SyntheticFaceSpec spec;
  spec.look = reference_looks()[0];
  spec.paint_eyeshadow = false;
  spec.noise = 0.02;
  spec.seed = 2024;
  const SyntheticFace face = render_face(spec);
  write_png(dir / "face.png", to_8bit(face.rgb));
  write_landmarks(dir / "face.landmarks", face.landmarks);

  // Template: the outer half of the shadow zone, painted on a copy of the face.
  SyntheticFaceSpec painted = spec;
  painted.paint_eyeshadow = true;
  painted.look.pattern = ShadowPattern::outer;
  write_png(dir / "template.png", to_8bit(painted_frame_alpha(render_face(painted))));

  const Lab shadow = reference_looks()[2].eyeshadow;
  const Lab lip = reference_looks()[1].lip;
  const Lab found{70.0, 10.0, 16.0};
  const json j = {{"version", 1},
                  {"template", "template.png"},
                  {"eyeshadow_color", {shadow.L, shadow.a, shadow.b}},
                  {"lip_color", {lip.L, lip.a, lip.b}},
                  {"foundation_color", {found.L, found.a, found.b}},
                  {"intensities", {{"foundation", 0.8}, {"eyeshadow", 0.9}, {"lip", 0.7}}}};
  write_text_atomic(dir / "spec.json", j.dump(2) + "\n");
}


ToyFixture toy_fixture() {
  ToyFixture f;
  f.dims = {kFeatureCount, AttributeState::kCount, LabelSpace{2, 2, 2, 2}};
  const double aspect[8] = {1.5, 1.5, -1.5, -1.5, 0, 0, 0, 0};
  const double jaw[8] = {0, 0, 0, 0, 1.5, 1.5, -1.5, -1.5};
  for (int i = 0; i < 8; ++i) {
    TrainExample ex;
    ex.x.assign(kFeatureCount, 0.0);
    ex.x[feature::face_aspect] = aspect[i];
    ex.x[feature::jaw_width] = jaw[i];
    const double eye = i % 2 == 0 ? 1.0 : -1.0;
    ex.x[feature::left_eye_aspect] = eye;
    ex.x[feature::right_eye_aspect] = eye;
    ex.x[feature::jaw_profile + i] = 1.0;
    ex.y = f.dims.labels.label_at(2 * i + (i / 4));
    f.initial_states.push_back(initial_attributes(ex.x).index());
    f.data.push_back(std::move(ex));
  }
  return f;
}

MakeupDB toy_db() {
  const ToyFixture toy = toy_fixture();
  MakeupDB db;
  const EyeFrameMasks& masks = eye_frame_masks();
  for (int t = 0; t < 2; ++t) {
    EyeShadowTemplate tmpl;
    tmpl.id = t;
    tmpl.alpha = Image(canonical::kEyeFrameWidth, canonical::kEyeFrameHeight, 1);
    // Template 0 covers the whole zone, template 1 the half nearer x = 0.
    for (int y = 0; y < canonical::kEyeFrameHeight; ++y) {
      for (int x = 0; x < canonical::kEyeFrameWidth; ++x) {
        const bool on = masks.zone.at(x, y) >= 128 && (t == 0 || x < canonical::kEyeFrameWidth / 2);
        tmpl.alpha.at(x, y) = on ? 1.0 : 0.0;
      }
    }
    tmpl.mean_color = t == 0 ? Lab{45, 32, -38} : Lab{58, 24, 52};
    tmpl.source_image_id = "toy";
    db.templates.push_back(std::move(tmpl));
  }
  db.foundation = {ProductClass::foundation, {{72, 12, 18}, {55, 15, 26}}, {4, 4}};
  db.eyeshadow = {ProductClass::eyeshadow, {{45, 32, -38}, {58, 24, 52}}, {4, 4}};
  db.lip = {ProductClass::lip, {{48, 58, 28}, {40, 50, 8}}, {4, 4}};
  for (std::size_t i = 0; i < toy.data.size(); ++i) {
    Annotation a;
    char id[32];
    std::snprintf(id, sizeof id, "toy_%zu", i);
    a.image_id = id;
    a.label = toy.data[i].y;
    for (int f = 0; f < kFeatureCount; ++f) a.features.values[f] = toy.data[i].x[f];
    a.features.skin_valid = true;
    db.annotations.push_back(std::move(a));
  }
  db.validate();
  return db;
}

}  // namespace vmirror
