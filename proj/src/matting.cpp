#include "vmirror/matting.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "vmirror/colormodel.hpp"
#include "vmirror/error.hpp"
#include "vmirror/png_io.hpp"
#include "vmirror/rng.hpp"

namespace vmirror {

namespace {

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& y) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

TriangleMesh scaled_frame_mesh(double scale) {
  TriangleMesh m = eye_frame_mesh(Side::left);
  for (auto& v : m.vertices) v = {(v.x + 0.5) * scale - 0.5, (v.y + 0.5) * scale - 0.5};
  return m;
}

}  // namespace

Eigen::SparseMatrix<double> SparseSymMatrix::to_eigen() const {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(entries.size() * 2);
  for (const auto& e : entries) {
    trips.emplace_back(e.i, e.j, e.value);
    if (e.i != e.j) trips.emplace_back(e.j, e.i, e.value);
  }
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

std::vector<double> SparseSymMatrix::multiply(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n) fail(ErrorKind::validation, "multiply: dimension mismatch");
  std::vector<double> y(n, 0.0);
  for (const auto& e : entries) {
    y[e.i] += e.value * x[e.j];
    if (e.i != e.j) y[e.j] += e.value * x[e.i];
  }
  return y;
}

double SparseSymMatrix::max_abs_row_sum() const {
  const std::vector<double> ones(n, 1.0);
  double worst = 0.0;
  for (double v : multiply(ones)) worst = std::max(worst, std::abs(v));
  return worst;
}

double SparseSymMatrix::quadratic_form(std::span<const double> x) const {
  const auto y = multiply(x);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

SparseSymMatrix matting_laplacian(const Image& patch, int window_radius, double eps) {
  if (patch.channels() != 3) fail(ErrorKind::validation, "matting_laplacian: expected a 3-channel patch");
  if (window_radius < 1) fail(ErrorKind::validation, "matting_laplacian: window radius must be >= 1");
  if (!(eps > 0.0)) fail(ErrorKind::validation, "matting_laplacian: epsilon must be > 0");
  const int w = patch.width();
  const int h = patch.height();
  const int side = 2 * window_radius + 1;
  if (w < side || h < side) {
    fail(ErrorKind::validation, "matting_laplacian: patch smaller than one " + std::to_string(side) + "x" +
                                    std::to_string(side) + " window");
  }
  const int size = side * side;
  const double inv_size = 1.0 / size;

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(w - side + 1) * (h - side + 1) * size * (size + 1) / 2);
  std::vector<int> idx(size);
  std::vector<Eigen::Vector3d> colors(size);

  for (int cy = window_radius; cy < h - window_radius; ++cy) {
    for (int cx = window_radius; cx < w - window_radius; ++cx) {
      Eigen::Vector3d mean = Eigen::Vector3d::Zero();
      Eigen::Matrix3d second = Eigen::Matrix3d::Zero();
      int t = 0;
      for (int dy = -window_radius; dy <= window_radius; ++dy) {
        for (int dx = -window_radius; dx <= window_radius; ++dx, ++t) {
          const int x = cx + dx;
          const int y = cy + dy;
          idx[t] = y * w + x;
          colors[t] = {patch.at(x, y, 0), patch.at(x, y, 1), patch.at(x, y, 2)};
          mean += colors[t];
          second += colors[t] * colors[t].transpose();
        }
      }
      mean *= inv_size;
      const Eigen::Matrix3d cov = second * inv_size - mean * mean.transpose();
      const Eigen::Matrix3d inv = (cov + (eps * inv_size) * Eigen::Matrix3d::Identity()).inverse();
      for (int a = 0; a < size; ++a) {
        const Eigen::Vector3d da = inv * (colors[a] - mean);
        for (int b = 0; b < size; ++b) {
          if (idx[a] > idx[b]) continue;
          const double v = (a == b ? 1.0 : 0.0) - inv_size * (1.0 + da.dot(colors[b] - mean));
          trips.emplace_back(idx[a], idx[b], v);
        }
      }
    }
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> upper(w * h, w * h);
  upper.setFromTriplets(trips.begin(), trips.end());
  SparseSymMatrix out;
  out.n = w * h;
  out.entries.reserve(upper.nonZeros());
  for (int i = 0; i < upper.outerSize(); ++i) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(upper, i); it; ++it) {
      out.entries.push_back({static_cast<int>(it.row()), static_cast<int>(it.col()), it.value()});
    }
  }
  return out;
}

Eigenpairs smallest_eigenvectors(const SparseSymMatrix& L, int m, const EigenSolverOptions& options) {
  const int n = L.n;
  if (m < 1 || m >= n) fail(ErrorKind::validation, "smallest_eigenvectors: need 1 <= m < n");
  const Eigen::SparseMatrix<double> A = L.to_eigen();
  Eigen::SparseMatrix<double> shifted(n, n);
  shifted.setIdentity();
  shifted *= options.shift;
  shifted += A;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(shifted);
  if (solver.info() != Eigen::Success) fail(ErrorKind::runtime, "smallest_eigenvectors: factorization failed");

  const int extra = options.extra_vectors < 0 ? std::max(m, 8) : options.extra_vectors;
  const int p = std::min(n, m + extra);
  Rng rng(options.seed);
  Eigen::MatrixXd x(n, p);
  for (int j = 0; j < p; ++j) {
    for (int i = 0; i < n; ++i) x(i, j) = rng.uniform(-1.0, 1.0);
  }
  x = orthonormalize(x);

  double residual = 0.0;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    const Eigen::MatrixXd q = orthonormalize(solver.solve(x));
    const Eigen::MatrixXd aq = A * q;
    Eigen::MatrixXd h = q.transpose() * aq;
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(h);
    x = q * ritz.eigenvectors();
    const Eigen::MatrixXd ax = aq * ritz.eigenvectors();
    const Eigen::VectorXd theta = ritz.eigenvalues();
    residual = 0.0;
    for (int j = 0; j < m; ++j) residual = std::max(residual, (ax.col(j) - theta(j) * x.col(j)).norm());
    if (residual <= options.tolerance) {
      Eigenpairs out;
      out.iterations = iter;
      out.max_residual = residual;
      for (int j = 0; j < m; ++j) {
        Eigen::VectorXd v = x.col(j);
        // Fix the sign: positive coordinate sum, else positive first nonzero.
        double s = v.sum();
        if (std::abs(s) < 1e-12) {
          for (int i = 0; i < n; ++i) {
            if (std::abs(v(i)) > 1e-12) {
              s = v(i);
              break;
            }
          }
        }
        if (s < 0) v = -v;
        out.values.push_back(theta(j));
        out.vectors.emplace_back(v.data(), v.data() + n);
      }
      return out;
    }
  }
  throw ConvergenceError("smallest_eigenvectors: no convergence after " + std::to_string(options.max_iterations) +
                             " iterations (residual " + fmt(residual) + ")",
                         residual);
}

std::vector<Image> matting_components(std::span<const std::vector<double>> eigenvectors, int width, int height, int k,
                                      std::uint64_t seed) {
  const int m = static_cast<int>(eigenvectors.size());
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (m < 1) fail(ErrorKind::validation, "matting_components: no eigenvectors");
  if (k < 1 || k > m) fail(ErrorKind::validation, "matting_components: k must lie in [1, eigenvector count]");
  for (const auto& v : eigenvectors) {
    if (v.size() != n) fail(ErrorKind::validation, "matting_components: eigenvector length differs from pixel count");
  }
  std::vector<double> coords(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    for (int j = 0; j < m; ++j) {
      coords[i * m + j] = eigenvectors[j][i];
      norm += coords[i * m + j] * coords[i * m + j];
    }
    // Unit rows: pixels of one segment share a direction, and farthest-point
    // seeding no longer locks onto a few large-magnitude outliers.
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (int j = 0; j < m; ++j) coords[i * m + j] /= norm;
    }
  }
  const KMeansResult km = kmeans(coords, m, k, seed);

  std::vector<Image> comps;
  for (int c = 0; c < k; ++c) {
    // E (E^T u) for the cluster indicator u.
    std::vector<double> proj(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (km.assignments[i] != c) continue;
      for (int j = 0; j < m; ++j) proj[j] += eigenvectors[j][i];
    }
    Image alpha(width, height, 1);
    auto a = alpha.data();
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.0;
      for (int j = 0; j < m; ++j) v += eigenvectors[j][i] * proj[j];
      a[i] = std::clamp(v, 0.0, 1.0);
    }
    comps.push_back(std::move(alpha));
  }
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (const auto& comp : comps) sum += comp.data()[i];
    for (int c = 0; c < k; ++c) {
      auto& v = comps[c].data()[i];
      v = sum > 1e-6 ? v / sum : (km.assignments[i] == c ? 1.0 : 0.0);
    }
  }
  return comps;
}

const EyeFrameMasks& eye_frame_masks() {
  static const EyeFrameMasks masks = [] {
    const auto& shape = canonical_shape();
    const RegionMasks full = region_masks(shape, canonical::kSize, canonical::kSize, 0.0);
    const int ox = static_cast<int>(canonical::kEyeFrameOrigin.x);
    const int oy = static_cast<int>(canonical::kEyeFrameOrigin.y);
    auto crop = [&](const ByteMask& src) {
      ByteMask out(canonical::kEyeFrameWidth, canonical::kEyeFrameHeight);
      for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) out.at(x, y) = src.at(x + ox, y + oy);
      }
      return out;
    };
    EyeFrameMasks m;
    m.zone = crop(full.left_eye_shadow_zone);
    m.eye = crop(full.eyes);
    m.brow = crop(full.brows);
    for (const auto& p : region_polygons(shape).left_eye_shadow_zone) {
      m.zone_polygon.push_back(p - canonical::kEyeFrameOrigin);
    }
    return m;
  }();
  return masks;
}

Image crop_eye_frame(const Image& rgb, const LandmarkSet& landmarks) {
  return warp_image(rgb, face_eye_mesh(landmarks, Side::left), eye_frame_mesh(Side::left),
                    canonical::kEyeFrameWidth, canonical::kEyeFrameHeight);
}

EyeShadowTemplate extract_eyeshadow_template(const Image& rgb, const LandmarkSet& landmarks,
                                             const MattingConfig& config, int id,
                                             const std::string& source_image_id) {
  if (rgb.channels() != 3) fail(ErrorKind::validation, "extract_eyeshadow_template: expected an RGB image");
  landmarks.validate();
  if (!(config.working_scale > 0.0 && config.working_scale <= 1.0)) {
    fail(ErrorKind::validation, "extract_eyeshadow_template: working scale must lie in (0, 1]");
  }
  const int fw = canonical::kEyeFrameWidth;
  const int fh = canonical::kEyeFrameHeight;
  const Image frame = crop_eye_frame(rgb, landmarks);
  const Image lab = rgb_to_lab_image(frame);

  const int ww = static_cast<int>(std::lround(fw * config.working_scale));
  const int wh = static_cast<int>(std::lround(fh * config.working_scale));
  const Image work = config.working_scale == 1.0
                         ? frame
                         : warp_image(rgb, face_eye_mesh(landmarks, Side::left), scaled_frame_mesh(config.working_scale),
                                      ww, wh);

  const SparseSymMatrix lap = matting_laplacian(work, config.window_radius, config.epsilon);
  EigenSolverOptions opts;
  opts.seed = config.seed;
  const Eigenpairs eig = smallest_eigenvectors(lap, config.eigenvectors, opts);
  std::vector<Image> comps = matting_components(eig.vectors, ww, wh, config.components, config.seed);
  if (ww != fw || wh != fh) {
    for (auto& c : comps) c = resize_bilinear(c, fw, fh);
  }

  const EyeFrameMasks& masks = eye_frame_masks();
  Lab ring{};
  double ring_n = 0.0;
  for (int y = 0; y < fh; ++y) {
    for (int x = 0; x < fw; ++x) {
      if (masks.zone.at(x, y) || masks.eye.at(x, y) || masks.brow.at(x, y)) continue;
      const Point p{double(x), double(y)};
      if (distance_to_boundary(p, masks.zone_polygon) > config.ring_distance) continue;
      ring.L += lab.at(x, y, 0);
      ring.a += lab.at(x, y, 1);
      ring.b += lab.at(x, y, 2);
      ring_n += 1.0;
    }
  }
  if (ring_n == 0.0) fail(ErrorKind::runtime, "extract_eyeshadow_template: empty skin ring");
  ring = {ring.L / ring_n, ring.a / ring_n, ring.b / ring_n};

  Image alpha(fw, fh, 1);
  bool any = false;
  for (const auto& comp : comps) {
    double mass = 0.0, mx = 0.0, my = 0.0, zone_mass = 0.0;
    Lab mean{};
    for (int y = 0; y < fh; ++y) {
      for (int x = 0; x < fw; ++x) {
        const double a = comp.at(x, y);
        mass += a;
        mx += a * x;
        my += a * y;
        // Colour evidence comes from zone pixels the component dominates;
        // faint leakage over neighbouring regions would otherwise bias it.
        if (masks.zone.at(x, y) >= 128 && a >= 0.5) {
          zone_mass += a;
          mean.L += a * lab.at(x, y, 0);
          mean.a += a * lab.at(x, y, 1);
          mean.b += a * lab.at(x, y, 2);
        }
      }
    }
    if (mass < 1e-9 || zone_mass < 1.0) continue;
    if (!point_in_polygon({mx / mass, my / mass}, masks.zone_polygon)) continue;
    mean = {mean.L / zone_mass, mean.a / zone_mass, mean.b / zone_mass};
    if (chroma_distance(mean, ring) < config.min_chroma_contrast) continue;
    any = true;
    for (std::size_t i = 0; i < alpha.pixel_count(); ++i) alpha.data()[i] += comp.data()[i];
  }
  if (!any) fail(ErrorKind::validation, "no eye shadow detected");

  EyeShadowTemplate tmpl;
  tmpl.id = id;
  tmpl.source_image_id = source_image_id;
  double mass = 0.0;
  Lab mean{};
  for (std::size_t i = 0; i < alpha.pixel_count(); ++i) {
    const double zone = masks.zone.data[i] >= 128 ? 1.0 : 0.0;
    const double a = quantize_unit(std::clamp(alpha.data()[i], 0.0, 1.0) * zone) / 255.0;
    alpha.data()[i] = a;
    mass += a;
    mean.L += a * lab.data()[3 * i];
    mean.a += a * lab.data()[3 * i + 1];
    mean.b += a * lab.data()[3 * i + 2];
  }
  if (mass <= 0.0) fail(ErrorKind::validation, "no eye shadow detected");
  tmpl.alpha = std::move(alpha);
  tmpl.mean_color = {mean.L / mass, mean.a / mass, mean.b / mass};
  return tmpl;
}

double alpha_iou(const Image& a, const Image& b, double threshold) {
  if (!a.same_shape(b)) fail(ErrorKind::validation, "alpha_iou: dimension mismatch");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const bool x = a.data()[i] >= threshold;
    const bool y = b.data()[i] >= threshold;
    inter += x && y;
    uni += x || y;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

void save_template(const std::filesystem::path& dir, const EyeShadowTemplate& tmpl) {
  std::filesystem::create_directories(dir);
  write_png(dir / (std::to_string(tmpl.id) + ".png"), to_8bit(tmpl.alpha));
  std::string meta = "vmirror-template " + std::to_string(kTemplateSchemaVersion) + "\n";
  meta += "id: " + std::to_string(tmpl.id) + "\n";
  meta += "mean_lab: " + fmt(tmpl.mean_color.L) + " " + fmt(tmpl.mean_color.a) + " " + fmt(tmpl.mean_color.b) + "\n";
  meta += "source: " + tmpl.source_image_id + "\n";
  write_text_atomic(dir / (std::to_string(tmpl.id) + ".meta"), meta);
}

EyeShadowTemplate load_template(const std::filesystem::path& dir, int id) {
  const auto meta_path = dir / (std::to_string(id) + ".meta");
  const auto png_path = dir / (std::to_string(id) + ".png");
  const auto bytes = read_file(meta_path);
  const std::string text(bytes.begin(), bytes.end());
  auto bad = [&](const std::string& why) -> void {
    fail(ErrorKind::validation, "corrupted template record " + meta_path.string() + ": " + why);
  };
  EyeShadowTemplate tmpl;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) bad("empty");
  {
    std::istringstream head(line);
    std::string magic;
    int version = 0;
    if (!(head >> magic >> version) || magic != "vmirror-template") bad("bad header");
    if (version != kTemplateSchemaVersion) {
      fail(ErrorKind::schema, meta_path.string() + ": template schema version " + std::to_string(version) +
                                  " is not supported (expected " + std::to_string(kTemplateSchemaVersion) + ")");
    }
  }
  bool have_id = false, have_lab = false, have_source = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) bad("expected 'key: value'");
    const std::string key = line.substr(0, colon);
    std::string value = line.substr(colon + 1);
    if (!value.empty() && value.front() == ' ') value.erase(0, 1);
    if (key == "id") {
      std::istringstream v(value);
      if (!(v >> tmpl.id) || tmpl.id != id) bad("id does not match file name");
      have_id = true;
    } else if (key == "mean_lab") {
      std::istringstream v(value);
      std::string t[3];
      if (!(v >> t[0] >> t[1] >> t[2])) bad("mean_lab needs three values");
      double* dst[3] = {&tmpl.mean_color.L, &tmpl.mean_color.a, &tmpl.mean_color.b};
      for (int j = 0; j < 3; ++j) {
        auto r = std::from_chars(t[j].data(), t[j].data() + t[j].size(), *dst[j]);
        if (r.ec != std::errc() || r.ptr != t[j].data() + t[j].size() || !std::isfinite(*dst[j])) {
          bad("malformed mean_lab");
        }
      }
      have_lab = true;
    } else if (key == "source") {
      tmpl.source_image_id = value;
      have_source = true;
    } else {
      bad("unknown key '" + key + "'");
    }
  }
  if (!have_id || !have_lab || !have_source) bad("missing field");
  const Image8 png = read_png(png_path);
  if (png.channels != 1 || png.width != canonical::kEyeFrameWidth || png.height != canonical::kEyeFrameHeight) {
    fail(ErrorKind::validation, "template alpha " + png_path.string() + " must be a 192x128 grayscale PNG");
  }
  tmpl.alpha = to_working(png);
  return tmpl;
}

}  // namespace vmirror
