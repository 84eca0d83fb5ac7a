#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vmirror/dataset.hpp"
#include "vmirror/recommender.hpp"

// On-disk fixture sets built from procedural faces.

namespace vmirror {

// A manifest where every entry either passes all filter rules or fails
// exactly one planted rule. expected[id] is the planted reason, empty for
// clean entries.
struct PlantedManifest {
  std::filesystem::path manifest;
  std::vector<ManifestEntry> entries;
  std::map<std::string, std::string> expected;
};

PlantedManifest write_planted_manifest(const std::filesystem::path& dir, std::uint64_t seed = 7, int total = 100,
                                       int planted = 37);

// Faces painted from the reference looks; face i wears look i % 3.
struct LookSet {
  std::filesystem::path manifest;
  std::vector<ManifestEntry> entries;
  std::vector<int> looks;
};

LookSet write_look_set(const std::filesystem::path& dir, int count = 12, std::uint64_t seed = 11);

// Sample face bundle: face.png, face.landmarks, template.png, spec.json.
void write_sample(const std::filesystem::path& dir);

// Eight examples with distinct labels whose standardized features push the
// attribute heuristic into eight distinct states; each example also owns one
// private feature, so a per-state linear score separates them.
struct ToyFixture {
  ModelDims dims;
  std::vector<TrainExample> data;
  std::vector<int> initial_states;
};

ToyFixture toy_fixture();

// The toy examples as a DB: two templates and two colours per palette, one
// annotation per example with the example's features as raw values.
MakeupDB toy_db();

}  // namespace vmirror
