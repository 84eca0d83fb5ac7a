#include "vmirror/features.hpp"

#include <cmath>

#include "vmirror/error.hpp"

namespace vmirror {

namespace {

double dist(Point a, Point b) { return norm(a - b); }

Point mean_of(const std::array<Point, LandmarkSet::kPointCount>& p, std::initializer_list<int> idx) {
  Point s{};
  for (int i : idx) s = s + p[i];
  return (1.0 / static_cast<double>(idx.size())) * s;
}

}  // namespace

std::array<double, kGeometricFeatureCount> geometric_features(const LandmarkSet& landmarks) {
  landmarks.validate();
  const SimilarityTransform t = align_face(landmarks);
  std::array<Point, LandmarkSet::kPointCount> p;
  for (int i = 0; i < LandmarkSet::kPointCount; ++i) p[i] = t.apply(landmarks.points[i]);

  const double face_w = dist(p[0], p[16]);
  const Point brow_top = 0.5 * (p[19] + p[24]);
  const Point left_eye = mean_of(p, {36, 37, 38, 39, 40, 41});
  const Point right_eye = mean_of(p, {42, 43, 44, 45, 46, 47});
  const Point left_brow = mean_of(p, {17, 18, 19, 20, 21});
  const Point right_brow = mean_of(p, {22, 23, 24, 25, 26});
  const double iod = dist(left_eye, right_eye);
  const double lip_w = dist(p[48], p[54]);
  if (face_w <= 0.0 || iod <= 0.0 || lip_w <= 0.0 || dist(p[36], p[39]) <= 0.0 || dist(p[42], p[45]) <= 0.0 ||
      dist(p[27], p[33]) <= 0.0) {
    fail(ErrorKind::validation, "geometric_features: degenerate landmarks");
  }

  std::array<double, kGeometricFeatureCount> f{};
  f[feature::face_aspect] = dist(brow_top, p[8]) / face_w;
  f[feature::jaw_width] = dist(p[4], p[12]) / face_w;
  f[feature::left_eye_aspect] = (dist(p[37], p[41]) + dist(p[38], p[40])) / (2.0 * dist(p[36], p[39]));
  f[feature::right_eye_aspect] = (dist(p[44], p[46]) + dist(p[43], p[47])) / (2.0 * dist(p[45], p[42]));
  f[feature::interocular_width] = iod / face_w;
  f[feature::left_brow_eye] = dist(left_brow, left_eye) / iod;
  f[feature::right_brow_eye] = dist(right_brow, right_eye) / iod;
  f[feature::lip_fullness] = dist(p[51], p[57]) / lip_w;
  f[feature::lip_width] = lip_w / face_w;
  f[feature::nose_ratio] = dist(p[31], p[35]) / dist(p[27], p[33]);
  const Point center = 0.5 * (left_eye + right_eye);
  int slot = feature::jaw_profile;
  for (int j : {0, 2, 4, 6, 10, 12, 14, 16}) f[slot++] = dist(p[j], center) / face_w;
  return f;
}

FeatureVector extract_features(const Image& rgb, const LandmarkSet& landmarks) {
  if (rgb.channels() != 3) fail(ErrorKind::validation, "extract_features: expected an RGB image");
  FeatureVector out;
  const auto geo = geometric_features(landmarks);
  std::copy(geo.begin(), geo.end(), out.values.begin());

  // Forehead patch sampled on the canonical pixel grid, mapped into the image.
  const SimilarityTransform to_image = align_face(landmarks).inverse();
  const int x0 = static_cast<int>(canonical::kForeheadMin.x), x1 = static_cast<int>(canonical::kForeheadMax.x);
  const int y0 = static_cast<int>(canonical::kForeheadMin.y), y1 = static_cast<int>(canonical::kForeheadMax.y);
  std::array<double, 3> sum{}, sq{};
  int n = 0;
  for (int y = y0; y < y1 && out.skin_valid; ++y) {
    for (int x = x0; x < x1; ++x) {
      const Point q = to_image.apply({double(x), double(y)});
      if (q.x < 0.0 || q.y < 0.0 || q.x > rgb.width() - 1.0 || q.y > rgb.height() - 1.0) {
        out.skin_valid = false;
        break;
      }
      const int ix = static_cast<int>(q.x), iy = static_cast<int>(q.y);
      const double tx = q.x - ix, ty = q.y - iy;
      const int jx = std::min(ix + 1, rgb.width() - 1), jy = std::min(iy + 1, rgb.height() - 1);
      double c[3];
      for (int ch = 0; ch < 3; ++ch) {
        c[ch] = (1 - ty) * ((1 - tx) * rgb.at(ix, iy, ch) + tx * rgb.at(jx, iy, ch)) +
                ty * ((1 - tx) * rgb.at(ix, jy, ch) + tx * rgb.at(jx, jy, ch));
      }
      const Lab lab = srgb_unit_to_lab(c[0], c[1], c[2]);
      const double v[3] = {lab.L, lab.a, lab.b};
      for (int ch = 0; ch < 3; ++ch) {
        sum[ch] += v[ch];
        sq[ch] += v[ch] * v[ch];
      }
      ++n;
    }
  }
  if (out.skin_valid) {
    for (int ch = 0; ch < 3; ++ch) {
      const double mean = sum[ch] / n;
      out.values[feature::skin_mean + ch] = mean;
      out.values[feature::skin_std + ch] = std::sqrt(std::max(0.0, sq[ch] / n - mean * mean));
    }
  }
  return out;
}

Standardizer Standardizer::fit(std::span<const FeatureVector> samples) {
  if (samples.empty()) fail(ErrorKind::validation, "Standardizer::fit: no samples");
  Standardizer s;
  for (int k = 0; k < kFeatureCount; ++k) {
    const bool skin = k >= kGeometricFeatureCount;
    double sum = 0.0, sq = 0.0;
    int n = 0;
    for (const auto& f : samples) {
      if (skin && !f.skin_valid) continue;
      sum += f.values[k];
      ++n;
    }
    const double mean = n ? sum / n : 0.0;
    for (const auto& f : samples) {
      if (skin && !f.skin_valid) continue;
      sq += (f.values[k] - mean) * (f.values[k] - mean);
    }
    const double sd = n ? std::sqrt(sq / n) : 0.0;
    s.mean[k] = mean;
    s.scale[k] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

std::array<double, kFeatureCount> Standardizer::apply(const FeatureVector& f) const {
  std::array<double, kFeatureCount> z{};
  for (int k = 0; k < kFeatureCount; ++k) {
    if (k >= kGeometricFeatureCount && !f.skin_valid) continue;
    z[k] = (f.values[k] - mean[k]) / scale[k];
    if (!std::isfinite(z[k])) fail(ErrorKind::validation, "feature " + std::to_string(k) + " is not finite");
  }
  return z;
}

}  // namespace vmirror
