#pragma once

#include <array>
#include <cstddef>

#include "vmirror/geometry.hpp"
#include "vmirror/imageops.hpp"

namespace vmirror {

constexpr int kGeometricFeatureCount = 18;
constexpr int kSkinFeatureCount = 6;
constexpr int kFeatureCount = kGeometricFeatureCount + kSkinFeatureCount;

// Feature slots, in storage order.
namespace feature {
constexpr int face_aspect = 0;         // face height / face width
constexpr int jaw_width = 1;           // lower jaw width / face width
constexpr int left_eye_aspect = 2;     // lid opening / eye width
constexpr int right_eye_aspect = 3;
constexpr int interocular_width = 4;   // eye distance / face width
constexpr int left_brow_eye = 5;       // brow-eye centroid distance / eye distance
constexpr int right_brow_eye = 6;
constexpr int lip_fullness = 7;        // outer lip height / lip width
constexpr int lip_width = 8;           // lip width / face width
constexpr int nose_ratio = 9;          // nose width / nose length
constexpr int jaw_profile = 10;        // 8 slots: jaw points 0,2,4,6,10,12,14,16
constexpr int skin_mean = 18;          // L, a, b
constexpr int skin_std = 21;           // L, a, b
}  // namespace feature

struct FeatureVector {
  std::array<double, kFeatureCount> values{};
  // False when the forehead patch falls outside the image; the skin slots are
  // then meaningless and standardize to 0.
  bool skin_valid = true;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

// Ratios measured in the canonical frame, so similarity-invariant.
std::array<double, kGeometricFeatureCount> geometric_features(const LandmarkSet& landmarks);

FeatureVector extract_features(const Image& rgb, const LandmarkSet& landmarks);

// Per-slot z-scoring with training statistics.
struct Standardizer {
  std::array<double, kFeatureCount> mean{};
  std::array<double, kFeatureCount> scale{};  // std, 1 when degenerate

  static Standardizer fit(std::span<const FeatureVector> samples);
  std::array<double, kFeatureCount> apply(const FeatureVector& f) const;

  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

}  // namespace vmirror
