#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace vmirror {

struct Rgb8 {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb8&, const Rgb8&) = default;
};

struct Lab {
  double L = 0.0;
  double a = 0.0;
  double b = 0.0;

  friend bool operator==(const Lab&, const Lab&) = default;
};

// Euclidean distance in Lab (CIE76).
double delta_e(const Lab& x, const Lab& y);
double chroma_distance(const Lab& x, const Lab& y);

// Row-major floating point image with 1 or 3 interleaved channels. This is the
// working space for every pipeline stage; 8-bit only appears at I/O.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const { return data_.empty(); }
  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  double& at(int x, int y, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  double at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  Image channel(int c) const;
  void set_channel(int c, const Image& plane);

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;

  friend bool operator==(const Image8&, const Image8&) = default;
};

Image to_working(const Image8& img);
// Clamp to [0,1], scale, round half up.
Image8 to_8bit(const Image& img);
std::uint8_t quantize_unit(double v);

Lab srgb_to_lab(Rgb8 rgb);
Rgb8 lab_to_srgb(const Lab& lab);
// Gamma-encoded sRGB components in [0,1].
Lab srgb_unit_to_lab(double r, double g, double b);
std::array<double, 3> lab_to_srgb_unit(const Lab& lab);

// 3-channel sRGB [0,1] <-> 3-channel Lab.
Image rgb_to_lab_image(const Image& rgb);
Image lab_to_rgb_image(const Image& lab);

std::string to_hex(Rgb8 rgb);
// "#rrggbb" or "rrggbb"; throws on malformed input.
Rgb8 parse_hex(const std::string& hex);

// Mean over the (2r+1)^2 window, border windows divided by their in-bounds
// sample count. O(N) in the pixel count regardless of r.
Image box_filter(const Image& img, int radius);

// Gray-guide guided filter on single-channel images.
Image guided_filter(const Image& guide, const Image& input, int radius, double eps);

// Bilinear resampling with pixel-center alignment and edge clamping.
Image resize_bilinear(const Image& img, int width, int height);

// out = (1 - alpha) * base + alpha * overlay, clamped to [0,1].
Image blend(const Image& base, const Image& overlay, const Image& alpha);
Image blend(const Image& base, std::span<const double> color, const Image& alpha);

}  // namespace vmirror
