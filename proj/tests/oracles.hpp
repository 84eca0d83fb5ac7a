#pragma once

// Slow reference implementations, written independently of the library
// code paths they check.

#include <algorithm>
#include <vector>

#include <Eigen/Dense>

#include "vmirror/imageops.hpp"
#include "vmirror/makeup_db.hpp"
#include "vmirror/recommender.hpp"

namespace vmirror::testing {

// Direct O(N r^2) window mean with border-clamped counts.
inline Image naive_box(const Image& img, int r) {
  Image out(img.width(), img.height(), 1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double sum = 0.0;
      int count = 0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = x + dx;
          const int yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= img.width() || yy >= img.height()) continue;
          sum += img.at(xx, yy);
          ++count;
        }
      }
      out.at(x, y) = sum / count;
    }
  }
  return out;
}

// Evaluates a_k, b_k window by window, then averages them over the windows
// covering each pixel. Shares nothing with the running-sum path.
inline Image naive_guided(const Image& I, const Image& p, int r, double eps) {
  const int w = I.width();
  const int h = I.height();
  Image a(w, h, 1);
  Image b(w, h, 1);
  for (int ky = 0; ky < h; ++ky) {
    for (int kx = 0; kx < w; ++kx) {
      double si = 0, sp = 0, sii = 0, sip = 0;
      int n = 0;
      for (int y = std::max(0, ky - r); y <= std::min(h - 1, ky + r); ++y) {
        for (int x = std::max(0, kx - r); x <= std::min(w - 1, kx + r); ++x) {
          si += I.at(x, y);
          sp += p.at(x, y);
          sii += I.at(x, y) * I.at(x, y);
          sip += I.at(x, y) * p.at(x, y);
          ++n;
        }
      }
      const double mi = si / n;
      const double mp = sp / n;
      const double var = sii / n - mi * mi;
      const double cov = sip / n - mi * mp;
      a.at(kx, ky) = cov / (var + eps);
      b.at(kx, ky) = mp - a.at(kx, ky) * mi;
    }
  }
  Image q(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double sa = 0, sb = 0;
      int n = 0;
      for (int ky = std::max(0, y - r); ky <= std::min(h - 1, y + r); ++ky) {
        for (int kx = std::max(0, x - r); kx <= std::min(w - 1, x + r); ++kx) {
          sa += a.at(kx, ky);
          sb += b.at(kx, ky);
          ++n;
        }
      }
      q.at(x, y) = sa / n * I.at(x, y) + sb / n;
    }
  }
  return q;
}


// Least-squares form of the matting cost: per window, the residual of fitting
// alpha by a regularized affine function of color is alpha^T P alpha where P is
// the top-left block of I - G (G^T G)^-1 G^T.
inline Eigen::MatrixXd least_squares_laplacian(const Image& patch, int r, double eps) {
  const int w = patch.width();
  const int h = patch.height();
  const int side = 2 * r + 1;
  const int size = side * side;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(w * h, w * h);
  for (int cy = r; cy < h - r; ++cy) {
    for (int cx = r; cx < w - r; ++cx) {
      Eigen::MatrixXd G = Eigen::MatrixXd::Zero(size + 3, 4);
      std::vector<int> idx;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const int row = static_cast<int>(idx.size());
          for (int c = 0; c < 3; ++c) G(row, c) = patch.at(cx + dx, cy + dy, c);
          G(row, 3) = 1.0;
          idx.push_back((cy + dy) * w + cx + dx);
        }
      }
      for (int c = 0; c < 3; ++c) G(size + c, c) = std::sqrt(eps);
      const Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(size + 3, size + 3) -
                                   G * (G.transpose() * G).inverse() * G.transpose();
      for (int a = 0; a < size; ++a) {
        for (int b = 0; b < size; ++b) L(idx[a], idx[b]) += proj(a, b);
      }
    }
  }
  return L;
}


// Dense joint feature with the block layout spelled out independently.
inline std::vector<double> dense_phi(int F, int H, const LabelSpace& s, const std::vector<double>& x, int h,
                              const MakeupLabel& y) {
  const int T = s.templates, E = s.eyeshadow_colors, L = s.lip_colors, K = s.foundation_colors;
  std::vector<double> phi(F * H + H * (T + E + L + K) + E * L, 0.0);
  for (int f = 0; f < F; ++f) phi[h * F + f] = x[f];
  int base = F * H;
  phi[base + h * T + y.eyeshadow_template] = 1;
  base += H * T;
  phi[base + h * E + y.eyeshadow_color] = 1;
  base += H * E;
  phi[base + h * L + y.lip_color] = 1;
  base += H * L;
  phi[base + h * K + y.foundation_color] = 1;
  base += H * K;
  phi[base + y.eyeshadow_color * L + y.lip_color] = 1;
  return phi;
}

struct Brute {
  int h;
  MakeupLabel y;
  double v;
};

// Double loop over states and labels in lexicographic order, strict > keeps the first.
inline Brute brute_force(const ModelDims& d, const std::vector<double>& w, const std::vector<double>& x,
                  const MakeupLabel* gold) {
  Brute best{-1, {}, -1e300};
  const auto& s = d.labels;
  for (int h = 0; h < d.states; ++h) {
    for (int t = 0; t < s.templates; ++t)
      for (int e = 0; e < s.eyeshadow_colors; ++e)
        for (int l = 0; l < s.lip_colors; ++l)
          for (int k = 0; k < s.foundation_colors; ++k) {
            const MakeupLabel y{t, e, l, k};
            const auto phi = dense_phi(d.features, d.states, s, x, h, y);
            double v = 0;
            for (std::size_t i = 0; i < phi.size(); ++i) v += w[i] * phi[i];
            if (gold) {
              v += (t != gold->eyeshadow_template) + (e != gold->eyeshadow_color) + (l != gold->lip_color) +
                   (k != gold->foundation_color);
            }
            if (v > best.v) best = {h, y, v};
          }
  }
  return best;
}

}  // namespace vmirror::testing
