#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vmirror/geometry.hpp"
#include "vmirror/imageops.hpp"

// Procedural made-up faces with known ground truth. Used by the tests, the
// acceptance suite and the `fixtures` CLI command.

namespace vmirror {

// Which part of the shadow zone gets painted; "inner" is the half nearer the
// nose.
enum class ShadowPattern { full, inner, outer };

struct Look {
  Lab skin;
  Lab eyeshadow;
  Lab lip;
  ShadowPattern pattern = ShadowPattern::full;
};

struct SyntheticFaceSpec {
  FaceShape shape;
  int width = 512;
  int height = 512;
  Look look;
  bool paint_eyeshadow = true;
  double noise = 0.01;  // per-channel Gaussian sigma in unit RGB
  double confidence = 0.95;
  std::uint64_t seed = 0;
};

struct SyntheticFace {
  Image rgb;
  LandmarkSet landmarks;
  Image painted;  // eye-shadow coverage in image coordinates, 1 channel
};

SyntheticFace render_face(const SyntheticFaceSpec& spec);

// Ground-truth painted region in the canonical left-eye frame.
Image painted_frame_alpha(const SyntheticFace& face);

// Three well separated looks.
const std::vector<Look>& reference_looks();

// `count` faces cycling through the reference looks, with jittered geometry,
// pose and noise. Face i uses look i % 3.
std::vector<SyntheticFaceSpec> look_set(int count, std::uint64_t seed);

}  // namespace vmirror
