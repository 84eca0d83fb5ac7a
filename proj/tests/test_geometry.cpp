#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vmirror/error.hpp"
#include "vmirror/geometry.hpp"
#include "vmirror/rng.hpp"

using namespace vmirror;

namespace {

LandmarkSet apply(const LandmarkSet& lm, const SimilarityTransform& t) {
  LandmarkSet out = lm;
  for (auto& p : out.points) p = t.apply(p);
  return out;
}

bool same_transform(const SimilarityTransform& a, const SimilarityTransform& b, double tol) {
  for (Point p : {Point{0, 0}, Point{100, 0}, Point{0, 100}, Point{317, -45}}) {
    if (norm(a.apply(p) - b.apply(p)) > tol * std::max(1.0, norm(p))) return false;
  }
  return true;
}

std::vector<Point> convex_hull(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end(), [](Point a, Point b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  auto turn = [](Point o, Point a, Point b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); };
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && turn(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && turn(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

double triangle_area(const std::vector<Point>& v, const std::array<int, 3>& t) {
  return 0.5 * std::abs((v[t[1]].x - v[t[0]].x) * (v[t[2]].y - v[t[0]].y) -
                        (v[t[1]].y - v[t[0]].y) * (v[t[2]].x - v[t[0]].x));
}

// Piecewise-linear y of a polyline at column x.
double polyline_y(std::span<const Point> line, double x) {
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const Point a = line[i];
    const Point b = line[i + 1];
    if ((x >= a.x && x <= b.x) || (x >= b.x && x <= a.x)) {
      const double t = b.x == a.x ? 0.0 : (x - a.x) / (b.x - a.x);
      return a.y + t * (b.y - a.y);
    }
  }
  return std::nan("");
}

}  // namespace

TEST_CASE("canonical shape") {
  const auto& shape = canonical_shape();
  CHECK_NOTHROW(shape.validate());
  CHECK(norm(shape.centroid(Contour::left_eye) - canonical::kLeftEye) <= 1e-9);
  CHECK(norm(shape.centroid(Contour::right_eye) - canonical::kRightEye) <= 1e-9);
  for (int i = 0; i < 68; ++i) {
    const Point p = shape.points[i];
    const Point q = shape.points[mirror_index(i)];
    CHECK(std::abs(p.x + q.x - 512.0) <= 1e-9);
    CHECK(std::abs(p.y - q.y) <= 1e-9);
  }
}

TEST_CASE("align_face") {
  const auto& shape = canonical_shape();
  SUBCASE("canonical landmarks give the identity") {
    const auto t = align_face(shape);
    CHECK(std::abs(t.scale() - 1.0) <= 1e-12);
    CHECK(std::abs(t.rotation()) <= 1e-12);
    CHECK(norm(t.translation()) <= 1e-9);
  }
  SUBCASE("scaling by 2 about the origin") {
    const auto t = align_face(apply(shape, SimilarityTransform(2.0, 0.0, {0, 0})));
    CHECK(std::abs(t.scale() - 0.5) <= 1e-12);
  }
  SUBCASE("rotating by 10 degrees about the inter-ocular midpoint") {
    const double angle = 10.0 * std::numbers::pi / 180.0;
    const Point mid{256, 232};
    const SimilarityTransform to_origin(1.0, 0.0, Point{0, 0} - mid);
    const SimilarityTransform back(1.0, angle, mid);
    const auto t = align_face(apply(shape, back * to_origin));
    CHECK(std::abs(t.rotation() + angle) <= 1e-6);
  }
  SUBCASE("is exact on the eye centroids") {
    const SimilarityTransform s(0.37, 0.4, {40, -12});
    const auto moved = apply(shape, s);
    const auto t = align_face(moved);
    CHECK(norm(t.apply(moved.centroid(Contour::left_eye)) - canonical::kLeftEye) <= 1e-9);
    CHECK(norm(t.apply(moved.centroid(Contour::right_eye)) - canonical::kRightEye) <= 1e-9);
  }
  SUBCASE("coincident eyes are degenerate") {
    LandmarkSet flat = shape;
    for (auto& p : flat.points) p = {100, 100};
    CHECK_THROWS_WITH(align_face(flat), "degenerate landmarks");
  }
}

TEST_CASE("align_face is equivariant under similarities") {
  Rng rng(99);
  const auto& shape = canonical_shape();
  for (int trial = 0; trial < 50; ++trial) {
    const SimilarityTransform s(rng.uniform(0.2, 4.0), rng.uniform(-3.0, 3.0),
                                {rng.uniform(-300, 300), rng.uniform(-300, 300)});
    const auto lhs = align_face(apply(shape, s));
    const auto rhs = align_face(shape) * s.inverse();
    CHECK(same_transform(lhs, rhs, 1e-6));
  }
}

TEST_CASE("similarity composed with its inverse is the identity") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const SimilarityTransform s(rng.uniform(0.1, 10.0), rng.uniform(-3.1, 3.1),
                                {rng.uniform(-500, 500), rng.uniform(-500, 500)});
    CHECK(same_transform(s * s.inverse(), SimilarityTransform::identity(), 1e-9));
    CHECK(same_transform(s.inverse() * s, SimilarityTransform::identity(), 1e-9));
  }
  CHECK_THROWS_AS(SimilarityTransform(0.0, 0.0, {0, 0}), Error);
}

TEST_CASE("landmark documents") {
  const auto& shape = canonical_shape();
  SUBCASE("round trip") { CHECK(parse_landmarks(format_landmarks(shape)) == shape); }
  SUBCASE("67 points") {
    std::string text = format_landmarks(shape);
    text.erase(text.rfind('\n', text.size() - 2) + 1);
    CHECK_THROWS_WITH_AS(parse_landmarks(text), doctest::Contains("expected 68 points"), Error);
  }
  SUBCASE("unknown schema") {
    std::string text = format_landmarks(shape);
    text.replace(text.find("contour68"), 9, "points87");
    CHECK_THROWS_AS(parse_landmarks(text), Error);
  }
  SUBCASE("swapped eyes violate the invariant") {
    LandmarkSet bad = shape;
    for (int i = 0; i < 6; ++i) std::swap(bad.points[36 + i], bad.points[42 + i]);
    CHECK_THROWS_AS(bad.validate(), Error);
  }
  SUBCASE("out of bounds") {
    LandmarkSet bad = shape;
    bad.points[8].y = 512 * 1.2;
    CHECK_THROWS_AS(bad.validate(), Error);
  }
}

TEST_CASE("region masks") {
  const auto& shape = canonical_shape();
  SUBCASE("feather 0 is binary") {
    const auto m = region_masks(shape, 512, 512, 0.0);
    for (const ByteMask* mask : {&m.skin, &m.lips, &m.left_eye_shadow_zone, &m.right_eye_shadow_zone, &m.eyes,
                                 &m.brows}) {
      CHECK(std::all_of(mask->data.begin(), mask->data.end(), [](auto v) { return v == 0 || v == 255; }));
    }
  }
  SUBCASE("invariants hold for random faces") {
    Rng rng(17);
    for (int trial = 0; trial < 12; ++trial) {
      FaceShape fs;
      fs.center = {rng.uniform(200, 300), rng.uniform(180, 260)};
      fs.interocular = rng.uniform(60, 180);
      fs.rotation = rng.uniform(-0.3, 0.3);
      fs.jaw_squareness = rng.uniform(0.6, 1.4);
      fs.mouth_gap = rng.uniform(0.0, 0.1);
      const auto lm = make_face_landmarks(fs, 512, 512);
      const auto m = region_masks(lm, 512, 512, rng.uniform(0.0, 8.0));
      int overlaps = 0;
      for (std::size_t i = 0; i < m.skin.data.size(); ++i) {
        if (m.lips.data[i] >= 128 && m.skin.data[i] >= 128) ++overlaps;
        if ((m.eyes.data[i] >= 128 || m.brows.data[i] >= 128) && m.skin.data[i] != 0) ++overlaps;
      }
      CHECK(overlaps == 0);
    }
  }
  SUBCASE("eye-shadow zones sit between the upper lid and the brow") {
    const auto m = region_masks(shape, 512, 512, 6.0);
    const auto& lm = shape;
    const double half = 0.06 * lm.interocular();
    struct SideInfo {
      const ByteMask* zone;
      std::vector<Point> lid;
      std::vector<Point> brow_lower;
    };
    std::vector<SideInfo> sides(2);
    sides[0].zone = &m.left_eye_shadow_zone;
    sides[1].zone = &m.right_eye_shadow_zone;
    for (int i : {36, 37, 38, 39}) sides[0].lid.push_back(lm.points[i]);
    for (int i : {42, 43, 44, 45}) sides[1].lid.push_back(lm.points[i]);
    for (int i = 17; i <= 21; ++i) sides[0].brow_lower.push_back(lm.points[i] + Point{0, half});
    for (int i = 22; i <= 26; ++i) sides[1].brow_lower.push_back(lm.points[i] + Point{0, half});
    for (const auto& side : sides) {
      int count = 0;
      for (int y = 0; y < 512; ++y) {
        for (int x = 0; x < 512; ++x) {
          if (side.zone->at(x, y) == 0) continue;
          ++count;
          const double lid_y = polyline_y(side.lid, x);
          REQUIRE(std::isfinite(lid_y));
          CHECK(y < lid_y);
          const double brow_y = polyline_y(side.brow_lower, x);
          if (std::isfinite(brow_y)) CHECK(y > brow_y);
        }
      }
      CHECK(count > 500);
    }
  }
  SUBCASE("lip area matches the shoelace area on a square test pattern") {
    LandmarkSet lm = shape;
    // Outer lip on a 120 px square, inner lip on a 40 px square, both centred at (256, 400).
    auto square = [](int n, double half, int index) {
      const double t = 4.0 * index / n;
      const int edge = static_cast<int>(t);
      const double f = t - edge;
      switch (edge) {
        case 0: return Point{256 - half + 2 * half * f, 400 - half};
        case 1: return Point{256 + half, 400 - half + 2 * half * f};
        case 2: return Point{256 + half - 2 * half * f, 400 + half};
        default: return Point{256 - half, 400 + half - 2 * half * f};
      }
    };
    for (int i = 0; i < 12; ++i) lm.points[48 + i] = square(12, 60.0, i);
    for (int i = 0; i < 8; ++i) lm.points[60 + i] = square(8, 20.0, i);
    const auto m = region_masks(lm, 512, 512, 0.0);
    const auto outer = lm.contour(Contour::outer_lip);
    const auto inner = lm.contour(Contour::inner_lip);
    const double expected = shoelace_area(outer) - shoelace_area(inner);
    CHECK(std::abs(m.lips.area() - expected) <= 0.02 * expected);
  }
  SUBCASE("deterministic") { CHECK(region_masks(shape, 400, 300, 6.0) == region_masks(shape, 400, 300, 6.0)); }
  SUBCASE("zero dimensions") { CHECK_THROWS_AS(region_masks(shape, 0, 10, 6.0), Error); }
}

TEST_CASE("delaunay triangulation") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Point> pts;
    for (int i = 0; i < 25; ++i) pts.push_back({rng.uniform(0, 100), rng.uniform(0, 100)});
    const auto tris = delaunay(pts);
    double area = 0.0;
    for (const auto& t : tris) {
      area += triangle_area(pts, t);
      // Empty circumcircle.
      const Point a = pts[t[0]], b = pts[t[1]], c = pts[t[2]];
      const double d = 2 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
      const Point center{((a.x * a.x + a.y * a.y) * (b.y - c.y) + (b.x * b.x + b.y * b.y) * (c.y - a.y) +
                          (c.x * c.x + c.y * c.y) * (a.y - b.y)) / d,
                         ((a.x * a.x + a.y * a.y) * (c.x - b.x) + (b.x * b.x + b.y * b.y) * (a.x - c.x) +
                          (c.x * c.x + c.y * c.y) * (b.x - a.x)) / d};
      const double radius = norm(a - center);
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (static_cast<int>(i) == t[0] || static_cast<int>(i) == t[1] || static_cast<int>(i) == t[2]) continue;
        CHECK(norm(pts[i] - center) >= radius - 1e-6);
      }
    }
    CHECK(std::abs(area - shoelace_area(convex_hull(pts))) <= 1e-6);
  }
}

TEST_CASE("eye frame mesh covers the frame") {
  const auto mesh = eye_frame_mesh();
  CHECK_NOTHROW(mesh.validate());
  double area = 0.0;
  for (const auto& t : mesh.triangles) area += triangle_area(mesh.vertices, t);
  CHECK(std::abs(area - 191.0 * 127.0) <= 1e-6);
  const auto on_face = face_eye_mesh(canonical_shape(), Side::left);
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    CHECK(norm(on_face.vertices[i] - (mesh.vertices[i] + canonical::kEyeFrameOrigin)) <= 1e-9);
  }
  const auto right = face_eye_mesh(canonical_shape(), Side::right);
  const auto right_frame = eye_frame_mesh(Side::right);
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    CHECK(norm(right.vertices[i] - (right_frame.vertices[i] + canonical::kRightEyeFrameOrigin)) <= 1e-9);
  }
}

TEST_CASE("warp_alpha") {
  const auto mesh = eye_frame_mesh();
  const int w = canonical::kEyeFrameWidth;
  const int h = canonical::kEyeFrameHeight;
  Rng rng(21);
  Image alpha(w, h, 1);
  for (auto& v : alpha.data()) v = static_cast<double>(rng.below(256)) / 255.0;

  SUBCASE("identity warp") {
    const Image out = warp_alpha(alpha, mesh, mesh, w, h);
    for (std::size_t i = 0; i < out.data().size(); ++i) CHECK(std::abs(out.data()[i] - alpha.data()[i]) <= 1.0 / 255);
  }
  SUBCASE("zero template") {
    const Image out = warp_alpha(Image(w, h, 1), mesh, face_eye_mesh(canonical_shape(), Side::left), 512, 512);
    CHECK(std::all_of(out.data().begin(), out.data().end(), [](double v) { return v == 0.0; }));
  }
  SUBCASE("translated single triangle moves the mass centroid") {
    TriangleMesh src;
    src.vertices = {{0, 0}, {63, 0}, {63, 63}, {0, 63}, {20, 20}};
    src.triangles = delaunay(src.vertices);
    const auto& tri = src.triangles.front();
    const Polygon poly = {src.vertices[tri[0]], src.vertices[tri[1]], src.vertices[tri[2]]};
    const Image tmpl = rasterize_polygon(poly, 64, 64, 0.0).weights();
    TriangleMesh dst = src;
    for (auto& v : dst.vertices) v = v + Point{10, 0};
    auto centroid = [](const Image& img) {
      double m = 0, mx = 0, my = 0;
      for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
          m += img.at(x, y);
          mx += x * img.at(x, y);
          my += y * img.at(x, y);
        }
      }
      return Point{mx / m, my / m};
    };
    const Point before = centroid(warp_alpha(tmpl, src, src, 96, 96));
    const Point after = centroid(warp_alpha(tmpl, src, dst, 96, 96));
    CHECK(std::abs(after.x - before.x - 10.0) <= 0.5);
    CHECK(std::abs(after.y - before.y) <= 0.5);
  }
  SUBCASE("range and hull") {
    FaceShape fs;
    fs.center = {300, 260};
    fs.interocular = 110;
    fs.rotation = 0.2;
    const auto target = face_eye_mesh(make_face_landmarks(fs, 600, 520), Side::left);
    const Image out = warp_alpha(alpha, mesh, target, 600, 520);
    const std::vector<Point> hull = convex_hull(target.vertices);
    int out_of_range = 0;
    int outside_hull = 0;
    for (int y = 0; y < out.height(); ++y) {
      for (int x = 0; x < out.width(); ++x) {
        const double v = out.at(x, y);
        if (v < 0.0 || v > 1.0) ++out_of_range;
        const Point p{double(x), double(y)};
        if (v > 0.0 && !point_in_polygon(p, hull) && distance_to_boundary(p, hull) > 1e-6) ++outside_hull;
      }
    }
    CHECK(out_of_range == 0);
    CHECK(outside_hull == 0);
  }
  SUBCASE("topology mismatch") {
    TriangleMesh other = mesh;
    other.triangles.pop_back();
    CHECK_THROWS_AS(warp_alpha(alpha, mesh, other, w, h), Error);
  }
}
