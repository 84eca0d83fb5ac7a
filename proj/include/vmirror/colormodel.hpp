#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vmirror/imageops.hpp"

namespace vmirror {

struct KMeansResult {
  int dim = 0;
  std::vector<double> centers;  // k x dim, row-major
  std::vector<int> assignments;
  std::vector<std::size_t> counts;
  // Within-cluster sum of squares: after the first assignment, then after
  // every center update.
  std::vector<double> objective_history;
  int iterations = 0;

  int k() const { return dim == 0 ? 0 : static_cast<int>(centers.size()) / dim; }
  double objective() const { return objective_history.empty() ? 0.0 : objective_history.back(); }
};

// Seeded farthest-point initialization: a random first point, then
// repeatedly the point farthest from its nearest chosen center (ties to the
// lowest index). Returns point indices.
std::vector<std::size_t> farthest_point_init(std::span<const double> points, int dim, int k, std::uint64_t seed);

// Lloyd iterations to an assignment fixpoint or max_iters. Ties go to the
// lowest center index; empty clusters are re-seeded with the point farthest
// from its current center.
KMeansResult kmeans(std::span<const double> points, int dim, int k, std::uint64_t seed, int max_iters = 100);
KMeansResult kmeans(std::span<const Lab> colors, int k, std::uint64_t seed, int max_iters = 100);

double within_cluster_ss(std::span<const double> points, int dim, std::span<const double> centers,
                         std::span<const int> assignments);

enum class ProductClass { foundation, eyeshadow, lip };

std::string to_string(ProductClass c);
ProductClass parse_product_class(const std::string& name);

struct Palette {
  ProductClass product_class = ProductClass::foundation;
  std::vector<Lab> centers;
  std::vector<std::size_t> counts;

  std::size_t size() const { return centers.size(); }
  friend bool operator==(const Palette&, const Palette&) = default;
};

// One sample per image region; centers come out ordered by descending count.
Palette build_palette(std::span<const Lab> samples, ProductClass product_class, int k, std::uint64_t seed = 0);

// Index of the nearest center (Euclidean in Lab), ties to the lowest index.
int quantize(const Lab& color, const Palette& palette);

// Text record:
//   vmirror-palette 1
//   class: <foundation|eyeshadow|lip>
//   centers: <k>
//   <L> <a> <b> <count>    (k lines)
constexpr int kPaletteSchemaVersion = 1;
std::string format_palette(const Palette& palette);
Palette parse_palette(const std::string& text);

}  // namespace vmirror
