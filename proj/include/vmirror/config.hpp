#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "vmirror/dataset.hpp"
#include "vmirror/makeup_db.hpp"
#include "vmirror/recommender.hpp"
#include "vmirror/synthesis.hpp"

namespace vmirror {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path model;
  std::filesystem::path db;
  std::string provider_url;            // landmark provider; empty disables :auto
  int workers = 2;                     // concurrent synthesis jobs
  std::size_t max_upload_bytes = 8u << 20;
  std::filesystem::path store_dir;     // empty: memory only

  friend bool operator==(const ServiceConfig&, const ServiceConfig&) = default;
};

constexpr int kConfigSchemaVersion = 1;

// JSON document, every section optional:
//   {"version": 1, "filter": {...}, "build": {..., "matting": {...}},
//    "train": {...}, "synthesis": {...}, "service": {...}}
// Keys mirror the struct field names. Unknown keys are rejected at every level.
struct AppConfig {
  FilterThresholds filter;
  BuildConfig build;
  TrainConfig train;
  SynthesisTuning synthesis;
  ServiceConfig service;

  void validate() const;

  friend bool operator==(const AppConfig&, const AppConfig&) = default;
};

AppConfig parse_config(const std::string& text);
AppConfig load_config(const std::filesystem::path& path);
std::string format_config(const AppConfig& config);

// Sets one value by dotted key ("build.matting.components") from a JSON
// literal; the key must already exist.
void set_config_value(AppConfig& config, const std::string& key, const std::string& json_value);
// String values come back as plain text, others as JSON literals.
std::string get_config_value(const AppConfig& config, const std::string& key);

// A colour given either as a palette index or as an explicit Lab value.
struct ColorChoice {
  std::optional<int> palette_index;
  Lab lab;
};

// Synthesis request document:
//   {"label": {"eyeshadow_template": 0, "eyeshadow_color": 1, "lip_color": 0, "foundation_color": 2},
//    "intensities": {"foundation": 1, "eyeshadow": 0.8, "lip": 1}}
// or explicit slots:
//   {"template": 3 | "path/to/alpha.png",
//    "eyeshadow_color": 1 | "#aa5533" | [L, a, b], "lip_color": ..., "foundation_color": ...,
//    "intensities": {...}}
// Intensities default to 1. "version", when present, must be 1.
struct SynthesisRequest {
  std::optional<MakeupLabel> label;
  std::optional<int> template_id;
  std::filesystem::path template_path;
  std::optional<ColorChoice> eyeshadow;
  std::optional<ColorChoice> lip;
  std::optional<ColorChoice> foundation;
  Intensities intensities;
};

SynthesisRequest parse_synthesis_request(const std::string& text);

// Resolves indices against the DB (required unless every slot is explicit).
// Relative template paths resolve against base_dir; paths are refused when
// allow_paths is false.
MakeupSpec resolve_synthesis_request(const SynthesisRequest& request, const MakeupDB* db,
                                     const std::filesystem::path& base_dir, bool allow_paths);

// Content hash of a resolved spec: template bytes, colours and intensities.
std::string spec_digest(const MakeupSpec& spec);

}  // namespace vmirror
