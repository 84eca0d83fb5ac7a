#include "vmirror/colormodel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "vmirror/error.hpp"
#include "vmirror/rng.hpp"

namespace vmirror {

namespace {

double sq_dist(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int d = 0; d < dim; ++d) {
    const double t = a[d] - b[d];
    s += t * t;
  }
  return s;
}

int nearest(const double* p, const std::vector<double>& centers, int dim, int k) {
  int best = 0;
  double best_d = sq_dist(p, centers.data(), dim);
  for (int c = 1; c < k; ++c) {
    const double d = sq_dist(p, centers.data() + static_cast<std::size_t>(c) * dim, dim);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

void check_input(std::span<const double> points, int dim, int k) {
  if (dim <= 0 || points.size() % dim != 0) fail(ErrorKind::validation, "kmeans: point buffer not a multiple of dim");
  const std::size_t n = points.size() / dim;
  if (n == 0) fail(ErrorKind::validation, "kmeans: no points");
  if (k < 1) fail(ErrorKind::validation, "kmeans: k must be >= 1");
  if (static_cast<std::size_t>(k) > n) {
    fail(ErrorKind::validation, "kmeans: k = " + std::to_string(k) + " exceeds point count " + std::to_string(n));
  }
}

std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

std::vector<std::size_t> farthest_point_init(std::span<const double> points, int dim, int k, std::uint64_t seed) {
  check_input(points, dim, k);
  const std::size_t n = points.size() / dim;
  Rng rng(seed);
  std::vector<std::size_t> chosen{static_cast<std::size_t>(rng.below(n))};
  std::vector<double> nearest_d(n);
  for (std::size_t i = 0; i < n; ++i) nearest_d[i] = sq_dist(&points[i * dim], &points[chosen[0] * dim], dim);
  while (chosen.size() < static_cast<std::size_t>(k)) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (nearest_d[i] > nearest_d[best]) best = i;
    }
    chosen.push_back(best);
    for (std::size_t i = 0; i < n; ++i) {
      nearest_d[i] = std::min(nearest_d[i], sq_dist(&points[i * dim], &points[best * dim], dim));
    }
  }
  return chosen;
}

double within_cluster_ss(std::span<const double> points, int dim, std::span<const double> centers,
                         std::span<const int> assignments) {
  double total = 0.0;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    total += sq_dist(&points[i * dim], &centers[static_cast<std::size_t>(assignments[i]) * dim], dim);
  }
  return total;
}

KMeansResult kmeans(std::span<const double> points, int dim, int k, std::uint64_t seed, int max_iters) {
  check_input(points, dim, k);
  const std::size_t n = points.size() / dim;
  KMeansResult res;
  res.dim = dim;
  res.centers.resize(static_cast<std::size_t>(k) * dim);
  const auto init = farthest_point_init(points, dim, k, seed);
  for (int c = 0; c < k; ++c) {
    std::copy_n(&points[init[c] * dim], dim, res.centers.begin() + static_cast<std::ptrdiff_t>(c) * dim);
  }
  res.assignments.assign(n, -1);
  std::vector<int> next(n);

  for (int iter = 0; iter < max_iters; ++iter) {
    for (std::size_t i = 0; i < n; ++i) next[i] = nearest(&points[i * dim], res.centers, dim, k);
    if (iter > 0 && next == res.assignments) break;
    res.assignments = next;
    if (iter == 0) res.objective_history.push_back(within_cluster_ss(points, dim, res.centers, res.assignments));
    res.iterations = iter + 1;

    std::vector<std::size_t> counts(k, 0);
    for (int a : res.assignments) ++counts[a];
    // Empty clusters take the point farthest from its center.
    for (int c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[res.assignments[i]] <= 1) continue;
        const double d =
            sq_dist(&points[i * dim], &res.centers[static_cast<std::size_t>(res.assignments[i]) * dim], dim);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      --counts[res.assignments[far]];
      res.assignments[far] = c;
      counts[c] = 1;
    }

    std::fill(res.centers.begin(), res.centers.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double* center = &res.centers[static_cast<std::size_t>(res.assignments[i]) * dim];
      for (int d = 0; d < dim; ++d) center[d] += points[i * dim + d];
    }
    for (int c = 0; c < k; ++c) {
      for (int d = 0; d < dim; ++d) res.centers[static_cast<std::size_t>(c) * dim + d] /= static_cast<double>(counts[c]);
    }
    res.objective_history.push_back(within_cluster_ss(points, dim, res.centers, res.assignments));
  }
  res.counts.assign(k, 0);
  for (int a : res.assignments) ++res.counts[a];
  return res;
}

KMeansResult kmeans(std::span<const Lab> colors, int k, std::uint64_t seed, int max_iters) {
  std::vector<double> flat;
  flat.reserve(colors.size() * 3);
  for (const auto& c : colors) {
    flat.push_back(c.L);
    flat.push_back(c.a);
    flat.push_back(c.b);
  }
  return kmeans(flat, 3, k, seed, max_iters);
}

std::string to_string(ProductClass c) {
  switch (c) {
    case ProductClass::foundation: return "foundation";
    case ProductClass::eyeshadow: return "eyeshadow";
    case ProductClass::lip: return "lip";
  }
  return "unknown";
}

ProductClass parse_product_class(const std::string& name) {
  if (name == "foundation") return ProductClass::foundation;
  if (name == "eyeshadow") return ProductClass::eyeshadow;
  if (name == "lip") return ProductClass::lip;
  fail(ErrorKind::validation, "unknown product class '" + name + "'");
}

Palette build_palette(std::span<const Lab> samples, ProductClass product_class, int k, std::uint64_t seed) {
  if (k < 1) fail(ErrorKind::validation, "build_palette: k must be >= 1");
  if (samples.size() < static_cast<std::size_t>(k)) {
    fail(ErrorKind::validation, "build_palette: " + std::to_string(samples.size()) + " " + to_string(product_class) +
                                    " samples is fewer than k = " + std::to_string(k));
  }
  const KMeansResult km = kmeans(samples, k, seed);
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return km.counts[a] > km.counts[b]; });
  Palette p;
  p.product_class = product_class;
  for (int c : order) {
    p.centers.push_back({km.centers[3 * c], km.centers[3 * c + 1], km.centers[3 * c + 2]});
    p.counts.push_back(km.counts[c]);
  }
  return p;
}

int quantize(const Lab& color, const Palette& palette) {
  if (palette.centers.empty()) fail(ErrorKind::validation, "quantize: empty palette");
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < palette.centers.size(); ++i) {
    const double d = delta_e(color, palette.centers[i]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

std::string format_palette(const Palette& palette) {
  std::string out = "vmirror-palette " + std::to_string(kPaletteSchemaVersion) + "\n";
  out += "class: " + to_string(palette.product_class) + "\n";
  out += "centers: " + std::to_string(palette.centers.size()) + "\n";
  for (std::size_t i = 0; i < palette.centers.size(); ++i) {
    const auto& c = palette.centers[i];
    out += fmt(c.L) + " " + fmt(c.a) + " " + fmt(c.b) + " " + std::to_string(palette.counts[i]) + "\n";
  }
  return out;
}

Palette parse_palette(const std::string& text) {
  std::istringstream in(text);
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "vmirror-palette") fail(ErrorKind::validation, "palette: bad header");
  if (version != kPaletteSchemaVersion) {
    fail(ErrorKind::schema, "palette: schema version " + std::to_string(version) + " is not supported (expected " +
                                std::to_string(kPaletteSchemaVersion) + ")");
  }
  std::string key;
  std::string cls;
  std::size_t count = 0;
  if (!(in >> key >> cls) || key != "class:") fail(ErrorKind::validation, "palette: missing class");
  if (!(in >> key >> count) || key != "centers:" || count == 0) fail(ErrorKind::validation, "palette: missing centers");
  Palette p;
  p.product_class = parse_product_class(cls);
  for (std::size_t i = 0; i < count; ++i) {
    std::string tok[4];
    if (!(in >> tok[0] >> tok[1] >> tok[2] >> tok[3])) fail(ErrorKind::validation, "palette: truncated center list");
    double v[3];
    for (int j = 0; j < 3; ++j) {
      auto r = std::from_chars(tok[j].data(), tok[j].data() + tok[j].size(), v[j]);
      if (r.ec != std::errc() || r.ptr != tok[j].data() + tok[j].size() || !std::isfinite(v[j])) {
        fail(ErrorKind::validation, "palette: malformed center value '" + tok[j] + "'");
      }
    }
    std::size_t cnt = 0;
    auto r = std::from_chars(tok[3].data(), tok[3].data() + tok[3].size(), cnt);
    if (r.ec != std::errc() || cnt == 0) fail(ErrorKind::validation, "palette: count must be a positive integer");
    p.centers.push_back({v[0], v[1], v[2]});
    p.counts.push_back(cnt);
  }
  std::string extra;
  if (in >> extra) fail(ErrorKind::validation, "palette: trailing data");
  return p;
}

}  // namespace vmirror
