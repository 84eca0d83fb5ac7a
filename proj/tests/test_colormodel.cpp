#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "vmirror/colormodel.hpp"
#include "vmirror/error.hpp"
#include "vmirror/rng.hpp"

using namespace vmirror;

namespace {

// Textbook Lloyd from given initial centers: assign (ties to lowest index),
// stop when assignments repeat, recompute means.
std::pair<std::vector<double>, std::vector<int>> reference_lloyd(const std::vector<double>& pts, int dim,
                                                                 std::vector<double> centers, int max_iters) {
  const std::size_t n = pts.size() / dim;
  const int k = static_cast<int>(centers.size()) / dim;
  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < max_iters; ++iter) {
    std::vector<int> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      double best = 1e300;
      for (int c = 0; c < k; ++c) {
        double d = 0;
        for (int j = 0; j < dim; ++j) d += (pts[i * dim + j] - centers[c * dim + j]) * (pts[i * dim + j] - centers[c * dim + j]);
        if (d < best) {
          best = d;
          next[i] = c;
        }
      }
    }
    if (next == assign) break;
    assign = next;
    std::vector<double> sum(centers.size(), 0.0);
    std::vector<int> cnt(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++cnt[assign[i]];
      for (int j = 0; j < dim; ++j) sum[assign[i] * dim + j] += pts[i * dim + j];
    }
    for (int c = 0; c < k; ++c) {
      REQUIRE(cnt[c] > 0);
      for (int j = 0; j < dim; ++j) centers[c * dim + j] = sum[c * dim + j] / cnt[c];
    }
  }
  return {centers, assign};
}

std::vector<double> random_points(int n, int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> pts(static_cast<std::size_t>(n) * dim);
  for (auto& v : pts) v = rng.uniform(-50, 50);
  return pts;
}

}  // namespace

TEST_CASE("k = 1 converges to the coordinate-wise mean") {
  const auto pts = random_points(37, 3, 4);
  const auto res = kmeans(pts, 3, 1, 0);
  for (int d = 0; d < 3; ++d) {
    double sum = 0.0;
    for (std::size_t i = 0; i < 37; ++i) sum += pts[i * 3 + d];
    CHECK(res.centers[d] == sum / 37.0);
  }
}

TEST_CASE("two separated symmetric blobs") {
  const std::vector<double> pts = {0, 0, 0, 0, 0, 0, 10, 0, 0, 10, 0, 0};
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto res = kmeans(pts, 3, 2, seed);
    std::set<std::vector<double>> centers;
    for (int c = 0; c < 2; ++c) centers.insert({res.centers[3 * c], res.centers[3 * c + 1], res.centers[3 * c + 2]});
    CHECK(centers == std::set<std::vector<double>>{{0, 0, 0}, {10, 0, 0}});
  }
}

// Four Gaussian blobs with random centers.
std::vector<double> blob_points(int n, std::uint64_t seed) {
  Rng rng(seed);
  double centers[4][3];
  for (auto& c : centers) {
    for (auto& v : c) v = rng.uniform(-50, 50);
  }
  std::vector<double> pts;
  for (int i = 0; i < n; ++i) {
    const auto& c = centers[rng.below(4)];
    for (double v : c) pts.push_back(v + 6.0 * rng.normal());
  }
  return pts;
}

TEST_CASE("200 random points, k = 4") {
  const auto pts = blob_points(200, 77);
  const auto res = kmeans(pts, 3, 4, 5, 300);

  SUBCASE("matches a reference Lloyd run from the same initialization") {
    const auto init = farthest_point_init(pts, 3, 4, 5);
    std::vector<double> centers;
    for (auto i : init) centers.insert(centers.end(), pts.begin() + i * 3, pts.begin() + i * 3 + 3);
    const auto [ref_centers, ref_assign] = reference_lloyd(pts, 3, centers, 300);
    CHECK(res.centers == ref_centers);
    CHECK(res.assignments == ref_assign);
  }
  SUBCASE("beats the median of 100 random restarts") {
    Rng rng(1234);
    std::vector<double> objectives;
    for (int restart = 0; restart < 100; ++restart) {
      std::vector<std::size_t> idx;
      while (idx.size() < 4) {
        const auto i = rng.below(200);
        if (std::find(idx.begin(), idx.end(), i) == idx.end()) idx.push_back(i);
      }
      std::vector<double> centers;
      for (auto i : idx) centers.insert(centers.end(), pts.begin() + i * 3, pts.begin() + i * 3 + 3);
      const auto [c, a] = reference_lloyd(pts, 3, centers, 300);
      objectives.push_back(within_cluster_ss(pts, 3, c, a));
    }
    std::sort(objectives.begin(), objectives.end());
    const double median = 0.5 * (objectives[49] + objectives[50]);
    CHECK(res.objective() <= median);
  }
  SUBCASE("objective never increases") {
    for (std::size_t i = 1; i < res.objective_history.size(); ++i) {
      CHECK(res.objective_history[i] <= res.objective_history[i - 1]);
    }
  }
  SUBCASE("seed determinism") {
    const auto again = kmeans(pts, 3, 4, 5, 300);
    CHECK(again.centers == res.centers);
    CHECK(again.assignments == res.assignments);
  }
}

TEST_CASE("objective is monotone across seeds and dimensions") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int dim = 1 + static_cast<int>(seed % 5);
    const auto pts = random_points(120, dim, seed + 500);
    const auto res = kmeans(pts, dim, 2 + static_cast<int>(seed % 6), seed);
    for (std::size_t i = 1; i < res.objective_history.size(); ++i) {
      CHECK(res.objective_history[i] <= res.objective_history[i - 1] + 1e-12);
    }
  }
}

TEST_CASE("empty clusters are re-seeded") {
  // Duplicates force farthest-point init to choose coincident centers.
  const std::vector<double> pts = {1, 1, 1, 1, 1, 1, 1, 1, 1, 5, 5, 5};
  const auto res = kmeans(pts, 3, 3, 0);
  for (auto c : res.counts) CHECK(c > 0);
}

TEST_CASE("kmeans errors") {
  const std::vector<double> pts = {0, 0, 0, 1, 1, 1};
  CHECK_THROWS_AS(kmeans(pts, 3, 3, 0), Error);
  CHECK_THROWS_AS(kmeans(pts, 3, 0, 0), Error);
  CHECK_THROWS_AS(kmeans(std::span<const double>{}, 3, 1, 0), Error);
}

TEST_CASE("build_palette") {
  SUBCASE("single sample") {
    const std::vector<Lab> s = {{55.0, 12.0, -3.0}};
    const auto p = build_palette(s, ProductClass::lip, 1);
    REQUIRE(p.size() == 1);
    CHECK(p.centers[0] == s[0]);
    CHECK(p.counts[0] == 1);
  }
  SUBCASE("identical samples") {
    const std::vector<Lab> s(6, Lab{40.0, 20.0, 10.0});
    CHECK(build_palette(s, ProductClass::foundation, 1).centers[0] == s[0]);
  }
  SUBCASE("three noisy colors") {
    const Lab truth[3] = {{70, 10, 15}, {45, 40, 20}, {30, -5, -30}};
    Rng rng(8);
    std::vector<Lab> s;
    for (int i = 0; i < 50; ++i) {
      const Lab& t = truth[i % 3 == 0 ? 0 : (i % 5 == 0 ? 2 : 1)];
      s.push_back({t.L + rng.normal(), t.a + rng.normal(), t.b + rng.normal()});
    }
    const auto p = build_palette(s, ProductClass::eyeshadow, 3, 2);
    std::set<int> matched;
    for (const auto& c : p.centers) {
      for (int t = 0; t < 3; ++t) {
        if (delta_e(c, truth[t]) <= 3.0) matched.insert(t);
      }
    }
    CHECK(matched.size() == 3);
    CHECK(std::is_sorted(p.counts.rbegin(), p.counts.rend()));
    for (const auto& c : p.centers) {
      auto within = [&](auto get) {
        double lo = 1e9, hi = -1e9;
        for (const auto& x : s) {
          lo = std::min(lo, get(x));
          hi = std::max(hi, get(x));
        }
        return get(c) >= lo && get(c) <= hi;
      };
      CHECK(within([](const Lab& x) { return x.L; }));
      CHECK(within([](const Lab& x) { return x.a; }));
      CHECK(within([](const Lab& x) { return x.b; }));
    }
  }
  SUBCASE("too few samples") {
    const std::vector<Lab> s = {{1, 2, 3}, {4, 5, 6}};
    CHECK_THROWS_AS(build_palette(s, ProductClass::lip, 3), Error);
  }
}

TEST_CASE("quantize") {
  Palette p;
  p.centers = {{50, 0, 0}, {50, 30, 0}, {50, 0, 10}};
  p.counts = {1, 1, 1};
  SUBCASE("exact centers") {
    for (int j = 0; j < 3; ++j) CHECK(quantize(p.centers[j], p) == j);
  }
  SUBCASE("ties go to the lowest index") { CHECK(quantize({50, 0, 5}, p) == 0); }
  SUBCASE("agrees with a linear scan") {
    Rng rng(31);
    for (int i = 0; i < 500; ++i) {
      const Lab c{rng.uniform(0, 100), rng.uniform(-60, 60), rng.uniform(-60, 60)};
      int best = 0;
      for (int j = 1; j < 3; ++j) {
        if (delta_e(c, p.centers[j]) < delta_e(c, p.centers[best])) best = j;
      }
      CHECK(quantize(c, p) == best);
    }
  }
}

TEST_CASE("palette records") {
  Palette p;
  p.product_class = ProductClass::eyeshadow;
  p.centers = {{50.123456789012345, -0.1, 1e-7}, {3, 4, 5}};
  p.counts = {7, 2};
  CHECK(parse_palette(format_palette(p)) == p);
  std::string text = format_palette(p);
  text.replace(text.find(" 1\n"), 3, " 99\n");
  CHECK_THROWS_WITH_AS(parse_palette(text), doctest::Contains("99"), Error);
  CHECK_THROWS_AS(parse_palette("vmirror-palette 1\nclass: lip\ncenters: 2\n1 2 3 4\n"), Error);
}
