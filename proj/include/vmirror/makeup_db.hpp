#pragma once

#include <compare>
#include <filesystem>
#include <string>
#include <vector>

#include "vmirror/colormodel.hpp"
#include "vmirror/features.hpp"
#include "vmirror/matting.hpp"

namespace vmirror {

// Recommended makeup: one index per slot. Ordering is lexicographic in field
// order, which is the inference tie rule.
struct MakeupLabel {
  int eyeshadow_template = 0;
  int eyeshadow_color = 0;
  int lip_color = 0;
  int foundation_color = 0;

  friend auto operator<=>(const MakeupLabel&, const MakeupLabel&) = default;
};

// Number of slots that differ (0..4).
int hamming_loss(const MakeupLabel& a, const MakeupLabel& b);
std::string to_string(const MakeupLabel& label);

struct LabelSpace {
  int templates = 1;
  int eyeshadow_colors = 1;
  int lip_colors = 1;
  int foundation_colors = 1;

  int size() const;
  bool contains(const MakeupLabel& label) const;
  // Labels enumerate in lexicographic order.
  MakeupLabel label_at(int index) const;
  int index_of(const MakeupLabel& label) const;
  void validate() const;

  friend bool operator==(const LabelSpace&, const LabelSpace&) = default;
};

struct Annotation {
  std::string image_id;
  MakeupLabel label;
  FeatureVector features;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

constexpr int kDbSchemaVersion = 1;

// Layout on disk:
//   version               "vmirror-db 1" and the template count
//   palettes.<class>      palette records
//   templates/<id>.{png,meta}
//   annotations.jsonl     header line, then one record per image
struct MakeupDB {
  int schema_version = kDbSchemaVersion;
  std::vector<EyeShadowTemplate> templates;  // templates[i].id == i
  Palette foundation;
  Palette eyeshadow;
  Palette lip;
  std::vector<Annotation> annotations;

  LabelSpace label_space() const;
  // Throws if any annotation index or template id is out of range.
  void validate() const;

  friend bool operator==(const MakeupDB&, const MakeupDB&) = default;
};

void save_db(const MakeupDB& db, const std::filesystem::path& dir);
MakeupDB load_db(const std::filesystem::path& dir);

}  // namespace vmirror
