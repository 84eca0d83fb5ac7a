#pragma once

#include <vector>

#include "vmirror/geometry.hpp"
#include "vmirror/imageops.hpp"
#include "vmirror/matting.hpp"

namespace vmirror {

struct Intensities {
  double foundation = 1.0;
  double eyeshadow = 1.0;
  double lip = 1.0;

  friend bool operator==(const Intensities&, const Intensities&) = default;
};

// Blend fractions and filter settings.
struct SynthesisTuning {
  double foundation_chroma = 0.5;     // a/b move this far toward the foundation colour
  double eyeshadow_lightness = 0.3;   // L moves this far toward the shadow colour
  double lip_lightness = 0.4;         // lip mean L shifts this far toward the target
  double smoothing_radius = 8.0;      // guided filter radius at 160 px eye distance
  double smoothing_eps = 0.02 * 0.02;  // on L / 100
  double feather = kDefaultFeather;

  friend bool operator==(const SynthesisTuning&, const SynthesisTuning&) = default;
};

struct MakeupSpec {
  Image template_alpha;  // canonical left-eye frame
  Lab eyeshadow_color;
  Lab lip_color;
  Lab foundation_color;
  Intensities intensities;

  // Throws on intensities outside [0,1], non-finite colours or a template of
  // the wrong size.
  void validate() const;
};

// A Lab working image plus the set of pixels any stage has written. Pixels
// never written convert back to the untouched input values.
struct LabCanvas {
  Image lab;
  std::vector<std::uint8_t> touched;

  static LabCanvas from_rgb(const Image& rgb);
  Image to_rgb(const Image& original_rgb) const;
};

// Each stage leaves pixels with zero effective weight exactly as they were.
void apply_foundation(LabCanvas& canvas, const Image& skin_weights, const Lab& color, double intensity, int radius,
                      double eps, double chroma_fraction = 0.5);
void apply_eyeshadow(LabCanvas& canvas, const LandmarkSet& landmarks, const Image& template_alpha,
                     const Image& left_zone, const Image& right_zone, const Lab& color, double intensity,
                     double lightness_fraction = 0.3);
void apply_lipstick(LabCanvas& canvas, const Image& lip_weights, const Lab& color, double intensity,
                    double lightness_fraction = 0.4);

// Template alpha placed on both eyes in image coordinates (right eye uses the
// mirrored template).
struct PlacedShadow {
  Image left;
  Image right;
};
PlacedShadow place_template(const Image& template_alpha, const LandmarkSet& landmarks, int width, int height);

struct SynthesisResult {
  Image after;                // RGB working space
  std::vector<Image> stages;  // RGB after foundation, eye shadow, lips
};

// Foundation, then eye shadow, then lips.
SynthesisResult synthesize(const Image& rgb, const LandmarkSet& landmarks, const MakeupSpec& spec,
                           const SynthesisTuning& tuning = {}, bool keep_stages = false);

int smoothing_radius(const LandmarkSet& landmarks, const SynthesisTuning& tuning);

}  // namespace vmirror
