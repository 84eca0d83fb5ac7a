#pragma once

#include <Eigen/Sparse>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vmirror/geometry.hpp"
#include "vmirror/imageops.hpp"

namespace vmirror {

// Symmetric sparse matrix stored as its upper triangle (i <= j), sorted by
// (i, j).
struct SparseSymMatrix {
  struct Entry {
    int i;
    int j;
    double value;
  };

  int n = 0;
  std::vector<Entry> entries;

  Eigen::SparseMatrix<double> to_eigen() const;  // full symmetric storage
  std::vector<double> multiply(std::span<const double> x) const;
  double max_abs_row_sum() const;
  double quadratic_form(std::span<const double> x) const;
};

// Closed-form matting Laplacian over all (2r+1)^2 windows lying fully inside
// the patch. Pixel (x, y) maps to index y * width + x.
SparseSymMatrix matting_laplacian(const Image& patch, int window_radius, double eps);

struct EigenSolverOptions {
  int max_iterations = 2000;
  double tolerance = 1e-8;  // on ||L v - lambda v||
  double shift = 1e-7;      // factorizes L + shift * I
  int extra_vectors = -1;   // guard vectors; -1 picks max(m, 8)
  std::uint64_t seed = 0;
};

struct Eigenpairs {
  std::vector<double> values;  // ascending
  std::vector<std::vector<double>> vectors;
  int iterations = 0;
  double max_residual = 0.0;
};

// m smallest eigenpairs by shift-invert block subspace iteration with
// Rayleigh-Ritz. Throws ConvergenceError when the cap is hit.
Eigenpairs smallest_eigenvectors(const SparseSymMatrix& L, int m, const EigenSolverOptions& options = {});

// Soft segmentation: k-means on per-pixel eigenvector coordinates, cluster
// indicators projected onto the eigenvector span, clamped to [0,1] and
// renormalized per pixel.
std::vector<Image> matting_components(std::span<const std::vector<double>> eigenvectors, int width, int height, int k,
                                      std::uint64_t seed);

struct MattingConfig {
  int window_radius = 1;
  double epsilon = 1e-5;
  int eigenvectors = 10;
  int components = 8;
  double min_chroma_contrast = 8.0;
  double ring_distance = 8.0;
  // Matting runs on the eye frame scaled by this factor; components are
  // upsampled back to the full frame.
  double working_scale = 0.5;
  std::uint64_t seed = 0;

  friend bool operator==(const MattingConfig&, const MattingConfig&) = default;
};

struct EyeShadowTemplate {
  int id = 0;
  Image alpha;  // canonical left-eye frame, 8-bit quantized values
  Lab mean_color;
  std::string source_image_id;

  friend bool operator==(const EyeShadowTemplate&, const EyeShadowTemplate&) = default;
};

// Masks of the canonical face cropped to the left-eye frame (binary).
struct EyeFrameMasks {
  ByteMask zone;
  ByteMask eye;
  ByteMask brow;
  Polygon zone_polygon;  // eye-frame coordinates
};
const EyeFrameMasks& eye_frame_masks();

// Warps the left eye region of an sRGB [0,1] image into the eye frame.
Image crop_eye_frame(const Image& rgb, const LandmarkSet& landmarks);

// Throws Error("no eye shadow detected") when no component passes selection.
EyeShadowTemplate extract_eyeshadow_template(const Image& rgb, const LandmarkSet& landmarks,
                                             const MattingConfig& config = {}, int id = 0,
                                             const std::string& source_image_id = {});

double alpha_iou(const Image& a, const Image& b, double threshold = 0.5);

// templates/<id>.png (8-bit alpha) + templates/<id>.meta:
//   vmirror-template 1
//   id: <int>
//   mean_lab: <L> <a> <b>
//   source: <source id, rest of line>
constexpr int kTemplateSchemaVersion = 1;
void save_template(const std::filesystem::path& dir, const EyeShadowTemplate& tmpl);
EyeShadowTemplate load_template(const std::filesystem::path& dir, int id);

}  // namespace vmirror
