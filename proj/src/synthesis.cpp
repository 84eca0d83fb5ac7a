#include "vmirror/synthesis.hpp"

#include <algorithm>
#include <cmath>

#include "vmirror/error.hpp"

namespace vmirror {

namespace {

void check_intensity(double v, const char* stage) {
  if (!(v >= 0.0 && v <= 1.0)) fail(ErrorKind::validation, std::string(stage) + " intensity must lie in [0, 1]");
}

void check_finite(const Lab& c, const char* what) {
  if (!std::isfinite(c.L) || !std::isfinite(c.a) || !std::isfinite(c.b)) {
    fail(ErrorKind::validation, std::string(what) + " colour is not finite");
  }
}

void check_weights(const LabCanvas& canvas, const Image& w, const char* what) {
  if (w.width() != canvas.lab.width() || w.height() != canvas.lab.height() || w.channels() != 1) {
    fail(ErrorKind::validation, std::string(what) + " mask does not match the image");
  }
}

}  // namespace

void MakeupSpec::validate() const {
  check_intensity(intensities.foundation, "foundation");
  check_intensity(intensities.eyeshadow, "eye shadow");
  check_intensity(intensities.lip, "lip");
  check_finite(eyeshadow_color, "eye shadow");
  check_finite(lip_color, "lip");
  check_finite(foundation_color, "foundation");
  if (template_alpha.width() != canonical::kEyeFrameWidth || template_alpha.height() != canonical::kEyeFrameHeight ||
      template_alpha.channels() != 1) {
    fail(ErrorKind::validation, "eye shadow template must be a 192x128 alpha map");
  }
}

LabCanvas LabCanvas::from_rgb(const Image& rgb) {
  if (rgb.channels() != 3) fail(ErrorKind::validation, "synthesis expects an RGB image");
  return {rgb_to_lab_image(rgb), std::vector<std::uint8_t>(rgb.pixel_count(), 0)};
}

Image LabCanvas::to_rgb(const Image& original) const {
  Image out = original;
  for (std::size_t i = 0; i < touched.size(); ++i) {
    if (!touched[i]) continue;
    const auto c = lab_to_srgb_unit({lab.data()[3 * i], lab.data()[3 * i + 1], lab.data()[3 * i + 2]});
    for (int ch = 0; ch < 3; ++ch) out.data()[3 * i + ch] = c[ch];
  }
  return out;
}

void apply_foundation(LabCanvas& canvas, const Image& skin, const Lab& color, double intensity, int radius, double eps,
                      double chroma_fraction) {
  check_intensity(intensity, "foundation");
  check_weights(canvas, skin, "skin");
  if (intensity == 0.0) return;
  Image lightness = canvas.lab.channel(0);
  for (auto& v : lightness.data()) v /= 100.0;
  const Image smooth = guided_filter(lightness, lightness, radius, eps);
  auto lab = canvas.lab.data();
  for (std::size_t i = 0; i < skin.pixel_count(); ++i) {
    const double w = intensity * skin.data()[i];
    if (w <= 0.0) continue;
    double& L = lab[3 * i];
    L = std::clamp(L + w * (100.0 * smooth.data()[i] - L), 0.0, 100.0);
    lab[3 * i + 1] += chroma_fraction * w * (color.a - lab[3 * i + 1]);
    lab[3 * i + 2] += chroma_fraction * w * (color.b - lab[3 * i + 2]);
    canvas.touched[i] = 1;
  }
}

PlacedShadow place_template(const Image& alpha, const LandmarkSet& landmarks, int width, int height) {
  return {warp_alpha(alpha, eye_frame_mesh(Side::left), face_eye_mesh(landmarks, Side::left), width, height),
          warp_alpha(mirror_horizontal(alpha), eye_frame_mesh(Side::right), face_eye_mesh(landmarks, Side::right),
                     width, height)};
}

void apply_eyeshadow(LabCanvas& canvas, const LandmarkSet& landmarks, const Image& alpha, const Image& left_zone,
                     const Image& right_zone, const Lab& color, double intensity, double lightness_fraction) {
  check_intensity(intensity, "eye shadow");
  check_weights(canvas, left_zone, "left zone");
  check_weights(canvas, right_zone, "right zone");
  if (intensity == 0.0) return;
  bool any = false;
  for (double v : alpha.data()) any = any || v > 0.0;
  if (!any) return;
  const PlacedShadow placed = place_template(alpha, landmarks, canvas.lab.width(), canvas.lab.height());
  auto lab = canvas.lab.data();
  for (std::size_t i = 0; i < canvas.touched.size(); ++i) {
    const double w = intensity * std::min(1.0, placed.left.data()[i] * left_zone.data()[i] +
                                                   placed.right.data()[i] * right_zone.data()[i]);
    if (w <= 0.0) continue;
    lab[3 * i] = std::clamp(lab[3 * i] + lightness_fraction * w * (color.L - lab[3 * i]), 0.0, 100.0);
    lab[3 * i + 1] += w * (color.a - lab[3 * i + 1]);
    lab[3 * i + 2] += w * (color.b - lab[3 * i + 2]);
    canvas.touched[i] = 1;
  }
}

void apply_lipstick(LabCanvas& canvas, const Image& lips, const Lab& color, double intensity,
                    double lightness_fraction) {
  check_intensity(intensity, "lip");
  check_weights(canvas, lips, "lip");
  if (intensity == 0.0) return;
  auto lab = canvas.lab.data();
  double mass = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < lips.pixel_count(); ++i) {
    mass += lips.data()[i];
    mean += lips.data()[i] * lab[3 * i];
  }
  if (mass <= 0.0) return;
  const double shift = lightness_fraction * intensity * (color.L - mean / mass);
  for (std::size_t i = 0; i < lips.pixel_count(); ++i) {
    const double m = lips.data()[i];
    const double w = intensity * m;
    if (w <= 0.0) continue;
    lab[3 * i] = std::clamp(lab[3 * i] + m * shift, 0.0, 100.0);
    lab[3 * i + 1] += w * (color.a - lab[3 * i + 1]);
    lab[3 * i + 2] += w * (color.b - lab[3 * i + 2]);
    canvas.touched[i] = 1;
  }
}

int smoothing_radius(const LandmarkSet& landmarks, const SynthesisTuning& tuning) {
  const double r = tuning.smoothing_radius * landmarks.interocular() / canonical::kInterocular;
  return std::max(1, static_cast<int>(std::lround(r)));
}

SynthesisResult synthesize(const Image& rgb, const LandmarkSet& landmarks, const MakeupSpec& spec,
                           const SynthesisTuning& tuning, bool keep_stages) {
  spec.validate();
  landmarks.validate();
  if (landmarks.image_width != rgb.width() || landmarks.image_height != rgb.height()) {
    fail(ErrorKind::validation, "landmarks were recorded for a " + std::to_string(landmarks.image_width) + "x" +
                                    std::to_string(landmarks.image_height) + " image, got " +
                                    std::to_string(rgb.width()) + "x" + std::to_string(rgb.height()));
  }
  LabCanvas canvas = LabCanvas::from_rgb(rgb);
  const RegionMasks masks = region_masks(landmarks, rgb.width(), rgb.height(), tuning.feather);
  SynthesisResult result;
  const auto& in = spec.intensities;

  apply_foundation(canvas, masks.skin.weights(), spec.foundation_color, in.foundation,
                   smoothing_radius(landmarks, tuning), tuning.smoothing_eps, tuning.foundation_chroma);
  if (keep_stages) result.stages.push_back(canvas.to_rgb(rgb));
  apply_eyeshadow(canvas, landmarks, spec.template_alpha, masks.left_eye_shadow_zone.weights(),
                  masks.right_eye_shadow_zone.weights(), spec.eyeshadow_color, in.eyeshadow,
                  tuning.eyeshadow_lightness);
  if (keep_stages) result.stages.push_back(canvas.to_rgb(rgb));
  apply_lipstick(canvas, masks.lips.weights(), spec.lip_color, in.lip, tuning.lip_lightness);
  result.after = canvas.to_rgb(rgb);
  if (keep_stages) result.stages.push_back(result.after);
  return result;
}

}  // namespace vmirror
