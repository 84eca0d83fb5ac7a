#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vmirror/imageops.hpp"

namespace vmirror {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
double norm(Point p);
double dot(Point a, Point b);

// Contours of the 68-point schema. "Left" and "right" are image sides: the
// left eye is the one with the smaller x (the subject's right eye).
enum class Contour { jaw, left_brow, right_brow, nose, left_eye, right_eye, outer_lip, inner_lip };

struct ContourRange {
  int begin;
  int count;
};

ContourRange contour_range(Contour c);

enum class Side { left, right };

struct LandmarkSet {
  static constexpr int kPointCount = 68;
  static constexpr const char* kSchema = "contour68";

  std::array<Point, kPointCount> points{};
  double confidence = 1.0;
  int image_width = 0;
  int image_height = 0;

  std::span<const Point> contour(Contour c) const;
  Point centroid(Contour c) const;
  double interocular() const;

  // Throws a validation Error naming the first violated invariant.
  void validate() const;

  friend bool operator==(const LandmarkSet&, const LandmarkSet&) = default;
};

// Landmark text document. Layout:
//
//   schema: contour68
//   image_width: <int>
//   image_height: <int>
//   confidence: <real>
//   points: 68
//   <x> <y>        (68 lines, contour order)
//
// Blank lines and lines starting with '#' are ignored.
LandmarkSet parse_landmarks(const std::string& text);
std::string format_landmarks(const LandmarkSet& landmarks);
LandmarkSet read_landmarks(const std::filesystem::path& path);
void write_landmarks(const std::filesystem::path& path, const LandmarkSet& landmarks);

class SimilarityTransform {
 public:
  SimilarityTransform() = default;
  SimilarityTransform(double scale, double rotation, Point translation);

  static SimilarityTransform identity() { return {}; }

  double scale() const { return scale_; }
  // Radians in (-pi, pi].
  double rotation() const { return rotation_; }
  Point translation() const { return translation_; }

  Point apply(Point p) const;
  SimilarityTransform inverse() const;
  // (a * b).apply(p) == a.apply(b.apply(p))
  friend SimilarityTransform operator*(const SimilarityTransform& a, const SimilarityTransform& b);

 private:
  double scale_ = 1.0;
  double rotation_ = 0.0;
  Point translation_{};
};

LandmarkSet transform_landmarks(const LandmarkSet& landmarks, const SimilarityTransform& t, int width,
                                int height);

namespace canonical {
constexpr int kSize = 512;
constexpr Point kLeftEye{176.0, 232.0};
constexpr Point kRightEye{336.0, 232.0};
constexpr double kInterocular = 160.0;

// Left-eye template frame: a 192x128 crop of the canonical frame.
constexpr Point kEyeFrameOrigin{80.0, 136.0};
constexpr int kEyeFrameWidth = 192;
constexpr int kEyeFrameHeight = 128;
// Mirror image of the left frame about the canonical midline x = 256.
constexpr Point kRightEyeFrameOrigin{241.0, 136.0};

// Upper-forehead patch used for skin statistics.
constexpr Point kForeheadMin{226.0, 112.0};
constexpr Point kForeheadMax{286.0, 152.0};
}  // namespace canonical

// Maps the two eye centroids onto the canonical eye positions exactly.
SimilarityTransform align_face(const LandmarkSet& landmarks);

// Parametric frontal face used for the canonical mean shape and for
// synthetic fixtures. Lengths are in units of the inter-ocular distance.
struct FaceShape {
  Point center{256.0, 232.0};  // midpoint of the eye centroids
  double interocular = 160.0;
  double rotation = 0.0;
  double face_width = 2.1;
  double chin_drop = 1.45;
  double jaw_squareness = 1.0;  // < 1 squarer, > 1 more pointed
  double eye_width = 0.42;
  double eye_height = 0.14;
  double brow_raise = 0.36;
  double nose_length = 0.62;
  double nose_width = 0.45;
  double mouth_drop = 0.98;
  double mouth_width = 0.62;
  double upper_lip = 0.09;
  double lower_lip = 0.12;
  double mouth_gap = 0.02;
};

LandmarkSet make_face_landmarks(const FaceShape& shape, int image_width, int image_height,
                                double confidence = 1.0);
// Mean shape in the canonical frame.
const LandmarkSet& canonical_shape();

using Polygon = std::vector<Point>;

double shoelace_area(std::span<const Point> polygon);
bool point_in_polygon(Point p, std::span<const Point> polygon);
double distance_to_boundary(Point p, std::span<const Point> polygon);

struct RegionPolygons {
  Polygon face;
  Polygon outer_lip;
  Polygon inner_lip;
  Polygon left_eye;
  Polygon right_eye;
  Polygon left_brow;
  Polygon right_brow;
  Polygon left_eye_shadow_zone;
  Polygon right_eye_shadow_zone;
};

// Region reconstruction from contours; the zone polygons extend the upper
// eyelid towards the brow by 55% of the eye-to-brow distance.
RegionPolygons region_polygons(const LandmarkSet& landmarks);

struct ByteMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  ByteMask() = default;
  ByteMask(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}

  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  // Single-channel Image with values / 255.
  Image weights() const;
  double area() const;  // sum of values / 255

  friend bool operator==(const ByteMask&, const ByteMask&) = default;
};

// Inside pixels ramp linearly from 0 at the boundary to 255 at `feather` px
// inside; nothing is written outside the polygon. feather == 0 is binary.
ByteMask rasterize_polygon(std::span<const Point> polygon, int width, int height, double feather);

struct RegionMasks {
  ByteMask skin;
  ByteMask lips;
  ByteMask left_eye_shadow_zone;
  ByteMask right_eye_shadow_zone;
  ByteMask eyes;
  ByteMask brows;

  friend bool operator==(const RegionMasks&, const RegionMasks&) = default;
};

constexpr double kDefaultFeather = 6.0;

RegionMasks region_masks(const LandmarkSet& landmarks, int width, int height, double feather = kDefaultFeather);

struct TriangleMesh {
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> triangles;

  // Throws on out-of-range indices or zero-area triangles.
  void validate() const;
};

// Bowyer-Watson. Deterministic for a given point order.
std::vector<std::array<int, 3>> delaunay(std::span<const Point> points);

// Landmark indices (left side) making up the eye-region mesh; the four
// padding corners follow them.
std::span<const int> eye_region_indices();
int mirror_index(int landmark_index);

// Canonical eye-region mesh in template (eye-frame) coordinates. For
// Side::right the vertices are mirrored so it indexes a mirrored template.
TriangleMesh eye_frame_mesh(Side side = Side::left);
// The same topology placed on a face in image coordinates.
TriangleMesh face_eye_mesh(const LandmarkSet& landmarks, Side side);

// Piecewise-affine warp with bilinear sampling. Output pixels not covered by
// any target triangle are 0; samples outside the source are 0.
Image warp_image(const Image& source, const TriangleMesh& source_mesh, const TriangleMesh& target_mesh, int width,
                 int height);
// warp_image on an alpha map, clamped to [0,1].
Image warp_alpha(const Image& alpha, const TriangleMesh& source_mesh, const TriangleMesh& target_mesh, int width,
                 int height);

Image mirror_horizontal(const Image& img);

}  // namespace vmirror
