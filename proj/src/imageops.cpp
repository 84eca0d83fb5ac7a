#include "vmirror/imageops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "vmirror/error.hpp"

namespace vmirror {

namespace {

// sRGB primaries, D65 white.
constexpr double kRgbToXyz[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
};

constexpr double kEpsilon = 216.0 / 24389.0;
constexpr double kKappa = 24389.0 / 27.0;

struct ColorTables {
  double xyz_to_rgb[3][3];
  double white[3];
  double decode[256];  // 8-bit code -> linear
};

const ColorTables& tables() {
  static const ColorTables t = [] {
    ColorTables out{};
    const auto& m = kRgbToXyz;
    for (int i = 0; i < 3; ++i) out.white[i] = m[i][0] * 1.0 + m[i][1] * 1.0 + m[i][2] * 1.0;
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    out.xyz_to_rgb[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
    out.xyz_to_rgb[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
    out.xyz_to_rgb[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
    out.xyz_to_rgb[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
    out.xyz_to_rgb[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
    out.xyz_to_rgb[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
    out.xyz_to_rgb[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
    out.xyz_to_rgb[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
    out.xyz_to_rgb[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
    for (int v = 0; v < 256; ++v) {
      const double c = v / 255.0;
      out.decode[v] = c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
    }
    return out;
  }();
  return t;
}

double srgb_decode(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double srgb_encode(double c) {
  return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

double lab_f(double t) { return t > kEpsilon ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0; }

Lab linear_to_lab(double r, double g, double b) {
  const auto& t = tables();
  double xyz[3];
  for (int i = 0; i < 3; ++i) {
    xyz[i] = (kRgbToXyz[i][0] * r + kRgbToXyz[i][1] * g + kRgbToXyz[i][2] * b) / t.white[i];
  }
  const double fx = lab_f(xyz[0]);
  const double fy = lab_f(xyz[1]);
  const double fz = lab_f(xyz[2]);
  Lab out;
  out.L = xyz[1] > kEpsilon ? 116.0 * fy - 16.0 : kKappa * xyz[1];
  out.a = 500.0 * (fx - fy);
  out.b = 200.0 * (fy - fz);
  return out;
}

std::array<double, 3> lab_to_linear(const Lab& lab) {
  const auto& t = tables();
  const double fy = (lab.L + 16.0) / 116.0;
  const double fx = fy + lab.a / 500.0;
  const double fz = fy - lab.b / 200.0;
  const double fx3 = fx * fx * fx;
  const double fz3 = fz * fz * fz;
  double xyz[3];
  xyz[0] = (fx3 > kEpsilon ? fx3 : (116.0 * fx - 16.0) / kKappa) * t.white[0];
  xyz[1] = (lab.L > kKappa * kEpsilon ? fy * fy * fy : lab.L / kKappa) * t.white[1];
  xyz[2] = (fz3 > kEpsilon ? fz3 : (116.0 * fz - 16.0) / kKappa) * t.white[2];
  std::array<double, 3> rgb{};
  for (int i = 0; i < 3; ++i) {
    rgb[i] = t.xyz_to_rgb[i][0] * xyz[0] + t.xyz_to_rgb[i][1] * xyz[1] + t.xyz_to_rgb[i][2] * xyz[2];
  }
  return rgb;
}

// Horizontal then vertical running-sum pass producing window sums and counts.
void window_sums(const Image& img, int radius, std::vector<double>& sums) {
  const int w = img.width();
  const int h = img.height();
  std::vector<double> horiz(img.pixel_count());
  std::vector<double> prefix(static_cast<std::size_t>(std::max(w, h)) + 1);
  auto src = img.data();
  for (int y = 0; y < h; ++y) {
    prefix[0] = 0.0;
    for (int x = 0; x < w; ++x) prefix[x + 1] = prefix[x] + src[static_cast<std::size_t>(y) * w + x];
    for (int x = 0; x < w; ++x) {
      const int lo = std::max(x - radius, 0);
      const int hi = std::min(x + radius, w - 1);
      horiz[static_cast<std::size_t>(y) * w + x] = prefix[hi + 1] - prefix[lo];
    }
  }
  sums.assign(img.pixel_count(), 0.0);
  for (int x = 0; x < w; ++x) {
    prefix[0] = 0.0;
    for (int y = 0; y < h; ++y) prefix[y + 1] = prefix[y] + horiz[static_cast<std::size_t>(y) * w + x];
    for (int y = 0; y < h; ++y) {
      const int lo = std::max(y - radius, 0);
      const int hi = std::min(y + radius, h - 1);
      sums[static_cast<std::size_t>(y) * w + x] = prefix[hi + 1] - prefix[lo];
    }
  }
}

void require_single_channel(const Image& img, const char* what) {
  if (img.channels() != 1) fail(ErrorKind::validation, std::string(what) + ": expected a single-channel image");
}

}  // namespace

double delta_e(const Lab& x, const Lab& y) {
  return std::sqrt((x.L - y.L) * (x.L - y.L) + (x.a - y.a) * (x.a - y.a) + (x.b - y.b) * (x.b - y.b));
}

double chroma_distance(const Lab& x, const Lab& y) {
  return std::hypot(x.a - y.a, x.b - y.b);
}

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || (channels != 1 && channels != 3)) {
    fail(ErrorKind::validation, "image: invalid dimensions or channel count");
  }
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Image Image::channel(int c) const {
  Image out(width_, height_, 1);
  for (std::size_t i = 0; i < pixel_count(); ++i) out.data_[i] = data_[i * channels_ + c];
  return out;
}

void Image::set_channel(int c, const Image& plane) {
  if (plane.width_ != width_ || plane.height_ != height_ || plane.channels_ != 1) {
    fail(ErrorKind::validation, "set_channel: dimension mismatch");
  }
  for (std::size_t i = 0; i < pixel_count(); ++i) data_[i * channels_ + c] = plane.data_[i];
}

Image to_working(const Image8& img) {
  Image out(img.width, img.height, img.channels);
  auto dst = out.data();
  for (std::size_t i = 0; i < img.data.size(); ++i) dst[i] = img.data[i] / 255.0;
  return out;
}

std::uint8_t quantize_unit(double v) {
  const double clamped = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(clamped * 255.0 + 0.5));
}

Image8 to_8bit(const Image& img) {
  Image8 out{img.width(), img.height(), img.channels(), {}};
  out.data.resize(img.data().size());
  auto src = img.data();
  for (std::size_t i = 0; i < src.size(); ++i) out.data[i] = quantize_unit(src[i]);
  return out;
}

Lab srgb_to_lab(Rgb8 rgb) {
  const auto& t = tables();
  return linear_to_lab(t.decode[rgb.r], t.decode[rgb.g], t.decode[rgb.b]);
}

Rgb8 lab_to_srgb(const Lab& lab) {
  const auto rgb = lab_to_srgb_unit(lab);
  return {quantize_unit(rgb[0]), quantize_unit(rgb[1]), quantize_unit(rgb[2])};
}

Lab srgb_unit_to_lab(double r, double g, double b) {
  return linear_to_lab(srgb_decode(r), srgb_decode(g), srgb_decode(b));
}

std::array<double, 3> lab_to_srgb_unit(const Lab& lab) {
  auto rgb = lab_to_linear(lab);
  for (auto& c : rgb) c = std::clamp(srgb_encode(std::clamp(c, 0.0, 1.0)), 0.0, 1.0);
  return rgb;
}

Image rgb_to_lab_image(const Image& rgb) {
  if (rgb.channels() != 3) fail(ErrorKind::validation, "rgb_to_lab_image: expected 3 channels");
  Image out(rgb.width(), rgb.height(), 3);
  auto src = rgb.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < rgb.pixel_count(); ++i) {
    const Lab lab = srgb_unit_to_lab(src[3 * i], src[3 * i + 1], src[3 * i + 2]);
    dst[3 * i] = lab.L;
    dst[3 * i + 1] = lab.a;
    dst[3 * i + 2] = lab.b;
  }
  return out;
}

Image lab_to_rgb_image(const Image& lab) {
  if (lab.channels() != 3) fail(ErrorKind::validation, "lab_to_rgb_image: expected 3 channels");
  Image out(lab.width(), lab.height(), 3);
  auto src = lab.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < lab.pixel_count(); ++i) {
    const auto rgb = lab_to_srgb_unit({src[3 * i], src[3 * i + 1], src[3 * i + 2]});
    dst[3 * i] = rgb[0];
    dst[3 * i + 1] = rgb[1];
    dst[3 * i + 2] = rgb[2];
  }
  return out;
}

std::string to_hex(Rgb8 rgb) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb.r, rgb.g, rgb.b);
  return buf;
}

Rgb8 parse_hex(const std::string& hex) {
  std::string s = hex;
  if (!s.empty() && s[0] == '#') s.erase(0, 1);
  if (s.size() != 6 || s.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos) {
    fail(ErrorKind::validation, "invalid hex color '" + hex + "'");
  }
  const unsigned long v = std::stoul(s, nullptr, 16);
  return {static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
}

Image box_filter(const Image& img, int radius) {
  require_single_channel(img, "box_filter");
  if (radius < 0) fail(ErrorKind::validation, "box_filter: radius must be >= 0");
  if (radius == 0 || img.empty()) return img;
  std::vector<double> sums;
  window_sums(img, radius, sums);
  Image out(img.width(), img.height(), 1);
  auto dst = out.data();
  const int w = img.width();
  const int h = img.height();
  for (int y = 0; y < h; ++y) {
    const int ny = std::min(y + radius, h - 1) - std::max(y - radius, 0) + 1;
    for (int x = 0; x < w; ++x) {
      const int nx = std::min(x + radius, w - 1) - std::max(x - radius, 0) + 1;
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      dst[i] = sums[i] / static_cast<double>(nx * ny);
    }
  }
  return out;
}

Image guided_filter(const Image& guide, const Image& input, int radius, double eps) {
  require_single_channel(guide, "guided_filter");
  require_single_channel(input, "guided_filter");
  if (!guide.same_shape(input)) fail(ErrorKind::validation, "guided_filter: guide and input dimensions differ");
  if (radius < 1) fail(ErrorKind::validation, "guided_filter: radius must be >= 1");
  if (!(eps > 0.0)) fail(ErrorKind::validation, "guided_filter: epsilon must be > 0");

  const std::size_t n = guide.pixel_count();
  auto I = guide.data();
  auto p = input.data();
  Image ip(guide.width(), guide.height(), 1);
  Image ii(guide.width(), guide.height(), 1);
  for (std::size_t i = 0; i < n; ++i) {
    ip.data()[i] = I[i] * p[i];
    ii.data()[i] = I[i] * I[i];
  }
  const Image mean_i = box_filter(guide, radius);
  const Image mean_p = box_filter(input, radius);
  const Image corr_ip = box_filter(ip, radius);
  const Image corr_ii = box_filter(ii, radius);

  Image a(guide.width(), guide.height(), 1);
  Image b(guide.width(), guide.height(), 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double mi = mean_i.data()[i];
    const double mp = mean_p.data()[i];
    const double var = corr_ii.data()[i] - mi * mi;
    const double cov = corr_ip.data()[i] - mi * mp;
    a.data()[i] = cov / (var + eps);
    b.data()[i] = mp - a.data()[i] * mi;
  }
  const Image mean_a = box_filter(a, radius);
  const Image mean_b = box_filter(b, radius);
  Image q(guide.width(), guide.height(), 1);
  for (std::size_t i = 0; i < n; ++i) q.data()[i] = mean_a.data()[i] * I[i] + mean_b.data()[i];
  return q;
}

Image resize_bilinear(const Image& img, int width, int height) {
  if (width <= 0 || height <= 0 || img.empty()) fail(ErrorKind::validation, "resize: empty image or target");
  Image out(width, height, img.channels());
  const double sx = static_cast<double>(img.width()) / width;
  const double sy = static_cast<double>(img.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double tx = fx - x0;
      for (int c = 0; c < img.channels(); ++c) {
        const double top = (1 - tx) * img.at(x0, y0, c) + tx * img.at(x1, y0, c);
        const double bottom = (1 - tx) * img.at(x0, y1, c) + tx * img.at(x1, y1, c);
        out.at(x, y, c) = (1 - ty) * top + ty * bottom;
      }
    }
  }
  return out;
}

Image blend(const Image& base, const Image& overlay, const Image& alpha) {
  if (!base.same_shape(overlay)) fail(ErrorKind::validation, "blend: base and overlay dimensions differ");
  if (alpha.channels() != 1 || alpha.width() != base.width() || alpha.height() != base.height()) {
    fail(ErrorKind::validation, "blend: alpha dimensions differ from base");
  }
  Image out = base;
  const int ch = base.channels();
  auto dst = out.data();
  auto ov = overlay.data();
  for (std::size_t i = 0; i < base.pixel_count(); ++i) {
    const double a = alpha.data()[i];
    if (a == 0.0) continue;
    for (int c = 0; c < ch; ++c) {
      const std::size_t k = i * ch + c;
      dst[k] = std::clamp((1.0 - a) * dst[k] + a * ov[k], 0.0, 1.0);
    }
  }
  return out;
}

Image blend(const Image& base, std::span<const double> color, const Image& alpha) {
  if (static_cast<int>(color.size()) != base.channels()) {
    fail(ErrorKind::validation, "blend: color channel count differs from base");
  }
  Image overlay(base.width(), base.height(), base.channels());
  auto dst = overlay.data();
  for (std::size_t i = 0; i < base.pixel_count(); ++i) {
    for (int c = 0; c < base.channels(); ++c) dst[i * base.channels() + c] = color[c];
  }
  return blend(base, overlay, alpha);
}

}  // namespace vmirror
