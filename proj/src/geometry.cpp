#include "vmirror/geometry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "vmirror/error.hpp"
#include "vmirror/png_io.hpp"

namespace vmirror {

namespace {

constexpr std::array<int, 68> kMirror = [] {
  std::array<int, 68> m{};
  for (int i = 0; i < 17; ++i) m[i] = 16 - i;
  for (int i = 0; i < 5; ++i) {
    m[17 + i] = 26 - i;
    m[26 - i] = 17 + i;
  }
  for (int i = 27; i <= 30; ++i) m[i] = i;
  for (int i = 0; i < 5; ++i) m[31 + i] = 35 - i;
  constexpr int eyes[6][2] = {{36, 45}, {37, 44}, {38, 43}, {39, 42}, {40, 47}, {41, 46}};
  for (const auto& e : eyes) {
    m[e[0]] = e[1];
    m[e[1]] = e[0];
  }
  constexpr int lips[][2] = {{48, 54}, {49, 53}, {50, 52}, {51, 51}, {55, 59}, {56, 58}, {57, 57},
                             {60, 64}, {61, 63}, {62, 62}, {65, 67}, {66, 66}};
  for (const auto& l : lips) {
    m[l[0]] = l[1];
    m[l[1]] = l[0];
  }
  return m;
}();

constexpr std::array<int, 11> kEyeRegion = {17, 18, 19, 20, 21, 36, 37, 38, 39, 40, 41};

double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }

double wrap_angle(double a) {
  while (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
  return a;
}

Point rotate(Point p, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

bool parse_double(std::string_view s, double& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

Point up_vector(const LandmarkSet& lm) {
  const Point axis = lm.centroid(Contour::right_eye) - lm.centroid(Contour::left_eye);
  const double len = norm(axis);
  return {axis.y / len, -axis.x / len};
}

Point mean_of(const LandmarkSet& lm, std::span<const int> indices) {
  Point sum{};
  for (int i : indices) sum = sum + lm.points[i];
  return (1.0 / static_cast<double>(indices.size())) * sum;
}

Polygon zone_polygon(const LandmarkSet& lm, std::span<const int> lid, Contour brow, Point up) {
  const Point lid_center = mean_of(lm, lid);
  const double eye_to_brow = dot(lm.centroid(brow) - lid_center, up);
  const Point lift = (0.55 * eye_to_brow) * up;
  Polygon poly;
  for (int i : lid) poly.push_back(lm.points[i]);
  for (auto it = lid.rbegin(); it != lid.rend(); ++it) poly.push_back(lm.points[*it] + lift);
  return poly;
}

Polygon brow_polygon(const LandmarkSet& lm, Contour brow, Point up, double half_thickness) {
  const auto pts = lm.contour(brow);
  Polygon poly;
  for (const auto& p : pts) poly.push_back(p + half_thickness * up);
  for (auto it = pts.rbegin(); it != pts.rend(); ++it) poly.push_back(*it - half_thickness * up);
  return poly;
}

void combine(ByteMask& dst, const ByteMask& src) {
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] = std::max(dst.data[i], src.data[i]);
}

}  // namespace

double norm(Point p) { return std::hypot(p.x, p.y); }
double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }

ContourRange contour_range(Contour c) {
  switch (c) {
    case Contour::jaw: return {0, 17};
    case Contour::left_brow: return {17, 5};
    case Contour::right_brow: return {22, 5};
    case Contour::nose: return {27, 9};
    case Contour::left_eye: return {36, 6};
    case Contour::right_eye: return {42, 6};
    case Contour::outer_lip: return {48, 12};
    case Contour::inner_lip: return {60, 8};
  }
  return {0, 0};
}

std::span<const Point> LandmarkSet::contour(Contour c) const {
  const auto r = contour_range(c);
  return std::span<const Point>(points).subspan(r.begin, r.count);
}

Point LandmarkSet::centroid(Contour c) const {
  Point sum{};
  const auto pts = contour(c);
  for (const auto& p : pts) sum = sum + p;
  return (1.0 / static_cast<double>(pts.size())) * sum;
}

double LandmarkSet::interocular() const {
  return norm(centroid(Contour::right_eye) - centroid(Contour::left_eye));
}

void LandmarkSet::validate() const {
  if (image_width <= 0 || image_height <= 0) fail(ErrorKind::validation, "image dimensions must be positive");
  if (!(confidence >= 0.0 && confidence <= 1.0)) fail(ErrorKind::validation, "confidence must lie in [0,1]");
  const double mx = 0.1 * image_width;
  const double my = 0.1 * image_height;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      fail(ErrorKind::validation, "point " + std::to_string(i) + " is not finite");
    }
    if (p.x < -mx || p.x > image_width + mx || p.y < -my || p.y > image_height + my) {
      fail(ErrorKind::validation, "point " + std::to_string(i) + " lies outside the image bounds");
    }
  }
  if (!(centroid(Contour::left_eye).x < centroid(Contour::right_eye).x)) {
    fail(ErrorKind::validation, "left eye centroid must lie left of the right eye centroid");
  }
}

LandmarkSet parse_landmarks(const std::string& text) {
  LandmarkSet lm;
  std::istringstream in(text);
  std::string line;
  bool have_schema = false;
  bool have_w = false;
  bool have_h = false;
  bool in_points = false;
  int declared = -1;
  std::vector<Point> pts;
  int line_no = 0;
  auto bad = [&](const std::string& why) {
    fail(ErrorKind::validation, "landmarks line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::string_view sv(line);
    sv.remove_prefix(first);
    if (in_points && sv.find(':') == std::string_view::npos) {
      const auto sp = sv.find_first_of(" \t,");
      if (sp == std::string_view::npos) bad("expected 'x y'");
      Point p;
      auto rest = sv.substr(sp + 1);
      while (!rest.empty() && (rest.front() == ' ' || rest.front() == '\t' || rest.front() == ',')) rest.remove_prefix(1);
      if (!parse_double(sv.substr(0, sp), p.x) || !parse_double(rest, p.y)) bad("malformed coordinate pair");
      pts.push_back(p);
      continue;
    }
    const auto colon = sv.find(':');
    if (colon == std::string_view::npos) bad("expected 'key: value'");
    const std::string key(sv.substr(0, colon));
    std::string_view value = sv.substr(colon + 1);
    while (!value.empty() && (value.front() == ' ' || value.front() == '\t')) value.remove_prefix(1);
    double number = 0.0;
    if (key == "schema") {
      if (value != LandmarkSet::kSchema) bad("unsupported schema '" + std::string(value) + "', expected contour68");
      have_schema = true;
    } else if (key == "image_width" || key == "image_height") {
      if (!parse_double(value, number) || number != std::floor(number) || number <= 0) bad("invalid " + key);
      (key == "image_width" ? lm.image_width : lm.image_height) = static_cast<int>(number);
      (key == "image_width" ? have_w : have_h) = true;
    } else if (key == "confidence") {
      if (!parse_double(value, number)) bad("invalid confidence");
      lm.confidence = number;
    } else if (key == "points") {
      if (!parse_double(value, number) || number < 0) bad("invalid point count");
      declared = static_cast<int>(number);
      in_points = true;
    } else {
      bad("unknown key '" + key + "'");
    }
  }
  if (!have_schema) fail(ErrorKind::validation, "landmarks: missing schema");
  if (!have_w || !have_h) fail(ErrorKind::validation, "landmarks: missing image dimensions");
  if (declared != LandmarkSet::kPointCount || static_cast<int>(pts.size()) != LandmarkSet::kPointCount) {
    fail(ErrorKind::validation, "expected 68 points, got " + std::to_string(pts.size()));
  }
  std::copy(pts.begin(), pts.end(), lm.points.begin());
  lm.validate();
  return lm;
}

std::string format_landmarks(const LandmarkSet& lm) {
  std::string out;
  out += "schema: contour68\n";
  out += "image_width: " + std::to_string(lm.image_width) + "\n";
  out += "image_height: " + std::to_string(lm.image_height) + "\n";
  out += "confidence: " + format_double(lm.confidence) + "\n";
  out += "points: 68\n";
  for (const auto& p : lm.points) out += format_double(p.x) + " " + format_double(p.y) + "\n";
  return out;
}

LandmarkSet read_landmarks(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_landmarks(std::string(bytes.begin(), bytes.end()));
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

void write_landmarks(const std::filesystem::path& path, const LandmarkSet& landmarks) {
  write_text_atomic(path, format_landmarks(landmarks));
}

SimilarityTransform::SimilarityTransform(double scale, double rotation, Point translation)
    : scale_(scale), rotation_(wrap_angle(rotation)), translation_(translation) {
  if (!(scale > 0.0)) fail(ErrorKind::validation, "similarity scale must be positive");
}

Point SimilarityTransform::apply(Point p) const { return scale_ * rotate(p, rotation_) + translation_; }

SimilarityTransform SimilarityTransform::inverse() const {
  const double s = 1.0 / scale_;
  return {s, -rotation_, -1.0 * (s * rotate(translation_, -rotation_))};
}

SimilarityTransform operator*(const SimilarityTransform& a, const SimilarityTransform& b) {
  return {a.scale_ * b.scale_, a.rotation_ + b.rotation_,
          a.scale_ * rotate(b.translation_, a.rotation_) + a.translation_};
}

LandmarkSet transform_landmarks(const LandmarkSet& landmarks, const SimilarityTransform& t, int width, int height) {
  LandmarkSet out = landmarks;
  for (auto& p : out.points) p = t.apply(p);
  out.image_width = width;
  out.image_height = height;
  return out;
}

SimilarityTransform align_face(const LandmarkSet& landmarks) {
  const Point left = landmarks.centroid(Contour::left_eye);
  const Point right = landmarks.centroid(Contour::right_eye);
  const Point axis = right - left;
  const double len = norm(axis);
  if (!(len > 1e-9)) fail(ErrorKind::validation, "degenerate landmarks");
  const double scale = canonical::kInterocular / len;
  const double rotation = -std::atan2(axis.y, axis.x);
  const Point moved = scale * rotate(left, rotation);
  return {scale, rotation, canonical::kLeftEye - moved};
}

LandmarkSet make_face_landmarks(const FaceShape& s, int image_width, int image_height, double confidence) {
  std::array<Point, 68> local{};
  const double q = s.jaw_squareness;
  for (int i = 0; i < 17; ++i) {
    const double phi = std::numbers::pi * i / 16.0;
    const double c = std::cos(phi);
    const double sn = std::sin(phi);
    const double cx = (c < 0 ? -1.0 : 1.0) * std::pow(std::abs(c), q);
    local[i] = {-0.5 * s.face_width * cx, 0.08 + (s.chin_drop - 0.08) * std::pow(std::abs(sn), q)};
  }
  constexpr double brow_dx[5] = {-0.32, -0.17, -0.02, 0.12, 0.25};
  constexpr double brow_arch[5] = {0.0, 0.04, 0.055, 0.045, 0.02};
  for (int i = 0; i < 5; ++i) {
    local[17 + i] = {-0.5 + brow_dx[i], -s.brow_raise - brow_arch[i]};
    local[26 - i] = {0.5 - brow_dx[i], -s.brow_raise - brow_arch[i]};
  }
  for (int k = 0; k < 4; ++k) local[27 + k] = {0.0, -0.05 + (s.nose_length + 0.05) * k / 3.0};
  constexpr double nostril[5] = {-1.0, -0.5, 0.0, 0.5, 1.0};
  for (int k = 0; k < 5; ++k) {
    local[31 + k] = {0.5 * s.nose_width * nostril[k], s.nose_length + (k == 2 ? 0.08 : 0.06)};
  }
  const double ew = s.eye_width;
  const double eh = s.eye_height;
  // Corner, two upper-lid points, corner, two lower-lid points, clockwise in image space.
  for (int side = 0; side < 2; ++side) {
    const double cx = side == 0 ? -0.5 : 0.5;
    const int base = side == 0 ? 36 : 42;
    local[base + 0] = {cx - ew / 2, 0.0};
    local[base + 1] = {cx - ew / 6, -eh / 2};
    local[base + 2] = {cx + ew / 6, -eh / 2};
    local[base + 3] = {cx + ew / 2, 0.0};
    local[base + 4] = {cx + ew / 6, eh / 2};
    local[base + 5] = {cx - ew / 6, eh / 2};
  }
  const double mw = 0.5 * s.mouth_width;
  const double g = 0.5 * s.mouth_gap;
  const double ut = s.upper_lip;
  const double lt = s.lower_lip;
  const Point outer[12] = {{-mw, 0},           {-0.6 * mw, -g - 0.8 * ut}, {-0.25 * mw, -g - ut},
                           {0, -g - 0.85 * ut}, {0.25 * mw, -g - ut},       {0.6 * mw, -g - 0.8 * ut},
                           {mw, 0},            {0.6 * mw, g + 0.8 * lt},   {0.25 * mw, g + lt},
                           {0, g + lt},        {-0.25 * mw, g + lt},       {-0.6 * mw, g + 0.8 * lt}};
  const Point inner[8] = {{-0.85 * mw, 0}, {-0.4 * mw, -g}, {0, -g}, {0.4 * mw, -g},
                          {0.85 * mw, 0},  {0.4 * mw, g},   {0, g},  {-0.4 * mw, g}};
  for (int k = 0; k < 12; ++k) local[48 + k] = outer[k] + Point{0.0, s.mouth_drop};
  for (int k = 0; k < 8; ++k) local[60 + k] = inner[k] + Point{0.0, s.mouth_drop};

  LandmarkSet lm;
  lm.image_width = image_width;
  lm.image_height = image_height;
  lm.confidence = confidence;
  for (int i = 0; i < 68; ++i) lm.points[i] = s.center + s.interocular * rotate(local[i], s.rotation);
  return lm;
}

const LandmarkSet& canonical_shape() {
  static const LandmarkSet shape = make_face_landmarks(FaceShape{}, canonical::kSize, canonical::kSize);
  return shape;
}

double shoelace_area(std::span<const Point> polygon) {
  double twice = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    twice += cross(polygon[i], polygon[(i + 1) % polygon.size()]);
  }
  return 0.5 * std::abs(twice);
}

bool point_in_polygon(Point p, std::span<const Point> polygon) {
  bool inside = false;
  for (std::size_t i = 0, j = polygon.size() - 1; i < polygon.size(); j = i++) {
    const Point a = polygon[i];
    const Point b = polygon[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

double distance_to_boundary(Point p, std::span<const Point> polygon) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const Point a = polygon[i];
    const Point b = polygon[(i + 1) % polygon.size()];
    const Point ab = b - a;
    const double len2 = dot(ab, ab);
    double t = len2 > 0 ? dot(p - a, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    best = std::min(best, norm(p - (a + t * ab)));
  }
  return best;
}

Image ByteMask::weights() const {
  Image out(width, height, 1);
  auto dst = out.data();
  for (std::size_t i = 0; i < data.size(); ++i) dst[i] = data[i] / 255.0;
  return out;
}

double ByteMask::area() const {
  double sum = 0.0;
  for (auto v : data) sum += v;
  return sum / 255.0;
}

ByteMask rasterize_polygon(std::span<const Point> polygon, int width, int height, double feather) {
  ByteMask mask(width, height);
  if (polygon.size() < 3) return mask;
  double minx = polygon[0].x, maxx = minx, miny = polygon[0].y, maxy = miny;
  for (const auto& p : polygon) {
    minx = std::min(minx, p.x);
    maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
  }
  const int x0 = std::max(0, static_cast<int>(std::floor(minx)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(maxx)));
  const int y0 = std::max(0, static_cast<int>(std::floor(miny)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(maxy)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const Point p{static_cast<double>(x), static_cast<double>(y)};
      if (!point_in_polygon(p, polygon)) continue;
      double v = 1.0;
      if (feather > 0.0) v = std::min(1.0, distance_to_boundary(p, polygon) / feather);
      mask.at(x, y) = static_cast<std::uint8_t>(std::floor(255.0 * v + 0.5));
    }
  }
  return mask;
}

RegionPolygons region_polygons(const LandmarkSet& lm) {
  RegionPolygons r;
  const Point up = up_vector(lm);
  const double iod = lm.interocular();

  const Point forehead = (0.5 * iod) * up;
  for (const auto& p : lm.contour(Contour::jaw)) r.face.push_back(p);
  for (int i = 26; i >= 22; --i) r.face.push_back(lm.points[i] + forehead);
  for (int i = 21; i >= 17; --i) r.face.push_back(lm.points[i] + forehead);

  const auto outer = lm.contour(Contour::outer_lip);
  const auto inner = lm.contour(Contour::inner_lip);
  r.outer_lip.assign(outer.begin(), outer.end());
  r.inner_lip.assign(inner.begin(), inner.end());
  const auto le = lm.contour(Contour::left_eye);
  const auto re = lm.contour(Contour::right_eye);
  r.left_eye.assign(le.begin(), le.end());
  r.right_eye.assign(re.begin(), re.end());

  r.left_brow = brow_polygon(lm, Contour::left_brow, up, 0.06 * iod);
  r.right_brow = brow_polygon(lm, Contour::right_brow, up, 0.06 * iod);

  constexpr int left_lid[4] = {36, 37, 38, 39};
  constexpr int right_lid[4] = {42, 43, 44, 45};
  r.left_eye_shadow_zone = zone_polygon(lm, left_lid, Contour::left_brow, up);
  r.right_eye_shadow_zone = zone_polygon(lm, right_lid, Contour::right_brow, up);
  return r;
}

RegionMasks region_masks(const LandmarkSet& landmarks, int width, int height, double feather) {
  if (width <= 0 || height <= 0) fail(ErrorKind::validation, "region_masks: zero image dimensions");
  if (!(feather >= 0.0)) fail(ErrorKind::validation, "region_masks: feather must be >= 0");
  const RegionPolygons poly = region_polygons(landmarks);
  RegionMasks m;

  m.eyes = rasterize_polygon(poly.left_eye, width, height, feather);
  combine(m.eyes, rasterize_polygon(poly.right_eye, width, height, feather));
  m.brows = rasterize_polygon(poly.left_brow, width, height, feather);
  combine(m.brows, rasterize_polygon(poly.right_brow, width, height, feather));

  m.lips = rasterize_polygon(poly.outer_lip, width, height, feather);
  const ByteMask mouth_opening = rasterize_polygon(poly.inner_lip, width, height, feather);
  for (std::size_t i = 0; i < m.lips.data.size(); ++i) {
    m.lips.data[i] = static_cast<std::uint8_t>(std::max(0, m.lips.data[i] - mouth_opening.data[i]));
  }

  auto exclude = [](ByteMask& target, const ByteMask& feature) {
    for (std::size_t i = 0; i < target.data.size(); ++i) {
      const int cap = std::max(0, 255 - 2 * static_cast<int>(feature.data[i]));
      target.data[i] = static_cast<std::uint8_t>(std::min<int>(target.data[i], cap));
    }
  };

  m.left_eye_shadow_zone = rasterize_polygon(poly.left_eye_shadow_zone, width, height, feather);
  m.right_eye_shadow_zone = rasterize_polygon(poly.right_eye_shadow_zone, width, height, feather);
  for (ByteMask* zone : {&m.left_eye_shadow_zone, &m.right_eye_shadow_zone}) {
    exclude(*zone, m.eyes);
    exclude(*zone, m.brows);
  }

  m.skin = rasterize_polygon(poly.face, width, height, feather);
  for (std::size_t i = 0; i < m.skin.data.size(); ++i) {
    m.skin.data[i] = static_cast<std::uint8_t>(std::min<int>(m.skin.data[i], 255 - m.lips.data[i]));
  }
  exclude(m.skin, m.eyes);
  exclude(m.skin, m.brows);
  return m;
}

void TriangleMesh::validate() const {
  const int n = static_cast<int>(vertices.size());
  for (const auto& t : triangles) {
    for (int v : t) {
      if (v < 0 || v >= n) fail(ErrorKind::validation, "mesh: triangle index out of range");
    }
    const double area = 0.5 * cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]);
    if (!(std::abs(area) > 0.0)) fail(ErrorKind::validation, "mesh: degenerate triangle");
  }
}

std::vector<std::array<int, 3>> delaunay(std::span<const Point> points) {
  const int n = static_cast<int>(points.size());
  if (n < 3) return {};
  std::vector<Point> pts(points.begin(), points.end());
  double minx = pts[0].x, maxx = minx, miny = pts[0].y, maxy = miny;
  for (const auto& p : pts) {
    minx = std::min(minx, p.x);
    maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
  }
  const double span = std::max({maxx - minx, maxy - miny, 1.0});
  const Point mid{0.5 * (minx + maxx), 0.5 * (miny + maxy)};
  pts.push_back(mid + Point{-100.0 * span, -100.0 * span});
  pts.push_back(mid + Point{100.0 * span, -100.0 * span});
  pts.push_back(mid + Point{0.0, 100.0 * span});

  struct Tri {
    std::array<int, 3> v;
  };
  auto orient = [&](std::array<int, 3> t) {
    if (cross(pts[t[1]] - pts[t[0]], pts[t[2]] - pts[t[0]]) < 0) std::swap(t[1], t[2]);
    return t;
  };
  auto in_circumcircle = [&](const std::array<int, 3>& t, Point d) {
    const Point a = pts[t[0]] - d;
    const Point b = pts[t[1]] - d;
    const Point c = pts[t[2]] - d;
    const double det = (a.x * a.x + a.y * a.y) * cross(b, c) - (b.x * b.x + b.y * b.y) * cross(a, c) +
                       (c.x * c.x + c.y * c.y) * cross(a, b);
    return det > 1e-9 * span * span * span * span;
  };

  std::vector<Tri> tris{{orient({n, n + 1, n + 2})}};
  for (int i = 0; i < n; ++i) {
    std::vector<Tri> keep;
    std::vector<std::array<int, 2>> edges;
    for (const auto& t : tris) {
      if (in_circumcircle(t.v, pts[i])) {
        for (int e = 0; e < 3; ++e) edges.push_back({t.v[e], t.v[(e + 1) % 3]});
      } else {
        keep.push_back(t);
      }
    }
    for (std::size_t a = 0; a < edges.size(); ++a) {
      bool shared = false;
      for (std::size_t b = 0; b < edges.size(); ++b) {
        if (a != b && edges[a][0] == edges[b][1] && edges[a][1] == edges[b][0]) {
          shared = true;
          break;
        }
      }
      if (!shared) keep.push_back({orient({edges[a][0], edges[a][1], i})});
    }
    tris = std::move(keep);
  }
  std::vector<std::array<int, 3>> out;
  for (const auto& t : tris) {
    if (t.v[0] >= n || t.v[1] >= n || t.v[2] >= n) continue;
    if (std::abs(cross(pts[t.v[1]] - pts[t.v[0]], pts[t.v[2]] - pts[t.v[0]])) < 1e-9) continue;
    out.push_back(t.v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::span<const int> eye_region_indices() { return kEyeRegion; }

int mirror_index(int landmark_index) { return kMirror.at(landmark_index); }

namespace {

std::array<Point, 4> frame_corners() {
  constexpr double w = canonical::kEyeFrameWidth - 1;
  constexpr double h = canonical::kEyeFrameHeight - 1;
  return {Point{0, 0}, Point{w, 0}, Point{w, h}, Point{0, h}};
}

const TriangleMesh& left_frame_mesh() {
  static const TriangleMesh mesh = [] {
    TriangleMesh m;
    const auto& shape = canonical_shape();
    for (int idx : kEyeRegion) m.vertices.push_back(shape.points[idx] - canonical::kEyeFrameOrigin);
    for (const auto& c : frame_corners()) m.vertices.push_back(c);
    m.triangles = delaunay(m.vertices);
    m.validate();
    return m;
  }();
  return mesh;
}

}  // namespace

TriangleMesh eye_frame_mesh(Side side) {
  TriangleMesh m = left_frame_mesh();
  if (side == Side::right) {
    for (auto& v : m.vertices) v.x = (canonical::kEyeFrameWidth - 1) - v.x;
  }
  return m;
}

TriangleMesh face_eye_mesh(const LandmarkSet& landmarks, Side side) {
  const SimilarityTransform to_image = align_face(landmarks).inverse();
  TriangleMesh frame = eye_frame_mesh(side);
  TriangleMesh m;
  m.triangles = frame.triangles;
  for (int idx : kEyeRegion) m.vertices.push_back(landmarks.points[side == Side::left ? idx : kMirror[idx]]);
  const Point origin = side == Side::left ? canonical::kEyeFrameOrigin : canonical::kRightEyeFrameOrigin;
  for (std::size_t k = kEyeRegion.size(); k < frame.vertices.size(); ++k) {
    m.vertices.push_back(to_image.apply(origin + frame.vertices[k]));
  }
  return m;
}

Image warp_image(const Image& source, const TriangleMesh& source_mesh, const TriangleMesh& target_mesh, int width,
                 int height) {
  if (source_mesh.triangles != target_mesh.triangles || source_mesh.vertices.size() != target_mesh.vertices.size()) {
    fail(ErrorKind::validation, "warp: mesh topology mismatch");
  }
  if (width <= 0 || height <= 0) fail(ErrorKind::validation, "warp: zero output dimensions");
  const int ch = source.channels();
  Image out(width, height, ch);
  std::vector<std::uint8_t> covered(static_cast<std::size_t>(width) * height, 0);

  auto sample = [&](int x, int y, int c) -> double {
    if (x < 0 || y < 0 || x >= source.width() || y >= source.height()) return 0.0;
    return source.at(x, y, c);
  };

  for (const auto& tri : target_mesh.triangles) {
    const Point t0 = target_mesh.vertices[tri[0]];
    const Point t1 = target_mesh.vertices[tri[1]];
    const Point t2 = target_mesh.vertices[tri[2]];
    const Point s0 = source_mesh.vertices[tri[0]];
    const Point s1 = source_mesh.vertices[tri[1]];
    const Point s2 = source_mesh.vertices[tri[2]];
    const double den = (t1.y - t2.y) * (t0.x - t2.x) + (t2.x - t1.x) * (t0.y - t2.y);
    if (std::abs(den) < 1e-12) continue;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({t0.x, t1.x, t2.x}))));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(std::max({t0.x, t1.x, t2.x}))));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({t0.y, t1.y, t2.y}))));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::max({t0.y, t1.y, t2.y}))));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const std::size_t idx = static_cast<std::size_t>(y) * width + x;
        if (covered[idx]) continue;
        const double l0 = ((t1.y - t2.y) * (x - t2.x) + (t2.x - t1.x) * (y - t2.y)) / den;
        const double l1 = ((t2.y - t0.y) * (x - t2.x) + (t0.x - t2.x) * (y - t2.y)) / den;
        const double l2 = 1.0 - l0 - l1;
        constexpr double tol = -1e-9;
        if (l0 < tol || l1 < tol || l2 < tol) continue;
        covered[idx] = 1;
        const double sx = l0 * s0.x + l1 * s1.x + l2 * s2.x;
        const double sy = l0 * s0.y + l1 * s1.y + l2 * s2.y;
        // Snap sub-ulp noise so identity warps sample exactly.
        const double rx = std::round(sx);
        const double ry = std::round(sy);
        const double ux = std::abs(sx - rx) < 1e-9 ? rx : sx;
        const double uy = std::abs(sy - ry) < 1e-9 ? ry : sy;
        const int ix = static_cast<int>(std::floor(ux));
        const int iy = static_cast<int>(std::floor(uy));
        const double fx = ux - ix;
        const double fy = uy - iy;
        for (int c = 0; c < ch; ++c) {
          double v = (1 - fx) * (1 - fy) * sample(ix, iy, c);
          if (fx > 0) v += fx * (1 - fy) * sample(ix + 1, iy, c);
          if (fy > 0) v += (1 - fx) * fy * sample(ix, iy + 1, c);
          if (fx > 0 && fy > 0) v += fx * fy * sample(ix + 1, iy + 1, c);
          out.at(x, y, c) = v;
        }
      }
    }
  }
  return out;
}

Image warp_alpha(const Image& alpha, const TriangleMesh& source_mesh, const TriangleMesh& target_mesh, int width,
                 int height) {
  if (alpha.channels() != 1) fail(ErrorKind::validation, "warp_alpha: expected a single-channel alpha map");
  Image out = warp_image(alpha, source_mesh, target_mesh, width, height);
  for (auto& v : out.data()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

Image mirror_horizontal(const Image& img) {
  Image out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = img.at(img.width() - 1 - x, y, c);
    }
  }
  return out;
}

}  // namespace vmirror
