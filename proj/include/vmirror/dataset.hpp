#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "vmirror/makeup_db.hpp"
#include "vmirror/matting.hpp"

namespace vmirror {

// One manifest line (JSON object):
//   {"id": "img_001", "image": "faces/img_001.png", "landmarks": "faces/img_001.lm",
//    "detector_confidence": 0.97, "landmark_confidence": 0.91, "width": 512, "height": 512}
// Relative paths resolve against the manifest's directory.
struct ManifestEntry {
  std::string id;
  std::filesystem::path image;
  std::filesystem::path landmarks;
  double detector_confidence = 0.0;
  double landmark_confidence = 0.0;
  int width = 0;
  int height = 0;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

std::vector<ManifestEntry> parse_manifest(const std::string& text, const std::filesystem::path& base_dir);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
std::string format_manifest_entry(const ManifestEntry& entry, const std::filesystem::path& base_dir);

struct FilterThresholds {
  double detector_confidence = 0.8;
  double landmark_confidence = 0.8;
  double min_face_size = 200.0;     // shorter side of the landmark bounding box, px
  double min_interocular = 60.0;    // px
  double min_frontality = 0.85;     // min/max of the eye-to-nose-bridge distances

  friend bool operator==(const FilterThresholds&, const FilterThresholds&) = default;
};

// Rejection reasons, in rule order.
namespace reason {
inline const std::string detector = "low detector confidence";
inline const std::string landmark = "low landmark confidence";
inline const std::string io = "io";
inline const std::string face_size = "small face";
inline const std::string interocular = "small inter-ocular distance";
inline const std::string frontality = "non-frontal pose";
inline const std::string allowlist = "not in allowlist";
}  // namespace reason

struct Rejection {
  ManifestEntry entry;
  std::string reason;
  std::string detail;
};

struct FilterResult {
  std::vector<ManifestEntry> accepted;
  std::vector<Rejection> rejected;

  std::map<std::string, int> reason_counts() const;
};

// Frontality proxy of a landmark set.
double frontality(const LandmarkSet& landmarks);

// Rules in order: confidences, readable landmarks matching the entry
// ("io"), face size, inter-ocular distance, frontality, optional allowlist.
FilterResult filter_manifest(const std::vector<ManifestEntry>& entries, const FilterThresholds& thresholds,
                             const std::set<std::string>* allowlist = nullptr);

std::set<std::string> read_allowlist(const std::filesystem::path& path);

// Line-delimited report: one record per entry in input order, then a summary.
std::string format_filter_report(const std::vector<ManifestEntry>& entries, const FilterResult& result);

struct BuildConfig {
  MattingConfig matting;
  int foundation_k = 8;
  int eyeshadow_k = 8;
  int lip_k = 8;
  int max_templates = 10;
  double feather = kDefaultFeather;
  std::uint64_t seed = 0;

  friend bool operator==(const BuildConfig&, const BuildConfig&) = default;
};

struct ImageFailure {
  std::string image_id;
  std::string message;
};

struct BuildReport {
  int analyzed = 0;
  std::vector<ImageFailure> failures;  // skipped images and why
};

// Per-image region colour samples.
struct RegionSamples {
  Lab foundation;
  Lab lip;
};
RegionSamples region_samples(const Image& rgb, const LandmarkSet& landmarks, double feather);

MakeupDB build_db(const std::vector<ManifestEntry>& accepted, const BuildConfig& config,
                  BuildReport* report = nullptr);

std::string format_build_report(const MakeupDB& db, const BuildReport& report);

}  // namespace vmirror
