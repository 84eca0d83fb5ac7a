#include "vmirror/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "vmirror/rng.hpp"

namespace vmirror {

namespace {

void paint(Image& rgb, const Image& weights, const Lab& color) {
  const auto [r, g, b] = lab_to_srgb_unit(color);
  const double c[3] = {r, g, b};
  for (std::size_t i = 0; i < weights.pixel_count(); ++i) {
    const double a = weights.data()[i];
    if (a <= 0.0) continue;
    for (int ch = 0; ch < 3; ++ch) rgb.data()[3 * i + ch] = (1 - a) * rgb.data()[3 * i + ch] + a * c[ch];
  }
}

Image layer(std::span<const Point> poly, int w, int h) { return rasterize_polygon(poly, w, h, 1.5).weights(); }

}  // namespace

SyntheticFace render_face(const SyntheticFaceSpec& spec) {
  const int w = spec.width;
  const int h = spec.height;
  SyntheticFace face;
  face.landmarks = make_face_landmarks(spec.shape, w, h, spec.confidence);
  const auto& lm = face.landmarks;
  const RegionPolygons polys = region_polygons(lm);

  face.rgb = Image(w, h, 3);
  const auto [br, bg, bb] = lab_to_srgb_unit(Lab{35.0, 2.0, -8.0});
  for (std::size_t i = 0; i < face.rgb.pixel_count(); ++i) {
    face.rgb.data()[3 * i] = br;
    face.rgb.data()[3 * i + 1] = bg;
    face.rgb.data()[3 * i + 2] = bb;
  }
  paint(face.rgb, layer(polys.face, w, h), spec.look.skin);

  face.painted = Image(w, h, 1);
  if (spec.paint_eyeshadow) {
    const Point le = lm.centroid(Contour::left_eye);
    const Point re = lm.centroid(Contour::right_eye);
    const Point axis = (1.0 / norm(re - le)) * (re - le);
    const RegionMasks masks = region_masks(lm, w, h, 0.0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const Point p{double(x), double(y)};
        double side = 0.0;
        if (masks.left_eye_shadow_zone.at(x, y)) {
          side = dot(p - le, axis);
        } else if (masks.right_eye_shadow_zone.at(x, y)) {
          side = -dot(p - re, axis);
        } else {
          continue;
        }
        const bool keep = spec.look.pattern == ShadowPattern::full ||
                          (spec.look.pattern == ShadowPattern::inner ? side >= 0.0 : side < 0.0);
        if (keep) face.painted.at(x, y) = 1.0;
      }
    }
    paint(face.rgb, face.painted, spec.look.eyeshadow);
  }

  const Lab brow{28.0, 6.0, 12.0};
  const Lab eye{88.0, 0.0, 2.0};
  paint(face.rgb, layer(polys.left_brow, w, h), brow);
  paint(face.rgb, layer(polys.right_brow, w, h), brow);
  paint(face.rgb, layer(polys.left_eye, w, h), eye);
  paint(face.rgb, layer(polys.right_eye, w, h), eye);
  paint(face.rgb, layer(polys.outer_lip, w, h), spec.look.lip);
  paint(face.rgb, layer(polys.inner_lip, w, h), Lab{20.0, 10.0, 5.0});

  if (spec.noise > 0.0) {
    Rng rng(spec.seed);
    for (auto& v : face.rgb.data()) v = std::clamp(v + spec.noise * rng.normal(), 0.0, 1.0);
  }
  return face;
}

Image painted_frame_alpha(const SyntheticFace& face) {
  return warp_alpha(face.painted, face_eye_mesh(face.landmarks, Side::left), eye_frame_mesh(Side::left),
                    canonical::kEyeFrameWidth, canonical::kEyeFrameHeight);
}

const std::vector<Look>& reference_looks() {
  static const std::vector<Look> looks = {
      {Lab{72.0, 12.0, 18.0}, Lab{45.0, 32.0, -38.0}, Lab{48.0, 58.0, 28.0}, ShadowPattern::full},
      {Lab{62.0, 16.0, 24.0}, Lab{50.0, -28.0, 24.0}, Lab{40.0, 50.0, 8.0}, ShadowPattern::inner},
      {Lab{50.0, 14.0, 28.0}, Lab{58.0, 24.0, 52.0}, Lab{56.0, 42.0, 36.0}, ShadowPattern::outer},
  };
  return looks;
}

std::vector<SyntheticFaceSpec> look_set(int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SyntheticFaceSpec> specs;
  const auto& looks = reference_looks();
  for (int i = 0; i < count; ++i) {
    SyntheticFaceSpec s;
    s.look = looks[i % looks.size()];
    s.seed = rng.next();
    s.shape.interocular = rng.uniform(120.0, 170.0);
    s.shape.center = {256.0 + rng.uniform(-12.0, 12.0), 232.0 + rng.uniform(-10.0, 10.0)};
    s.shape.rotation = rng.uniform(-0.08, 0.08);
    s.shape.face_width = rng.uniform(1.9, 2.3);
    s.shape.chin_drop = rng.uniform(1.3, 1.6);
    s.shape.jaw_squareness = rng.uniform(0.7, 1.3);
    s.shape.eye_width = rng.uniform(0.38, 0.46);
    s.shape.eye_height = rng.uniform(0.11, 0.17);
    s.shape.brow_raise = rng.uniform(0.33, 0.40);
    s.shape.mouth_width = rng.uniform(0.55, 0.7);
    s.shape.upper_lip = rng.uniform(0.07, 0.11);
    s.shape.lower_lip = rng.uniform(0.10, 0.14);
    specs.push_back(s);
  }
  return specs;
}

}  // namespace vmirror
