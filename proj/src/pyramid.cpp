#include "paintdomain/pyramid.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <string>

namespace paintdomain {

namespace {

constexpr std::array<double, 5> kKernel = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

// Separable filter along x then y with mirrored borders; `gain` scales each
// 1-D pass along axes longer than one sample.
Image blur(const Image& img, double gain) {
  const int w = img.width();
  const int h = img.height();
  const double gain_x = w > 1 ? gain : 1.0;
  const double gain_y = h > 1 ? gain : 1.0;
  Image tmp(w, h, img.channels());
  Image out(w, h, img.channels());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int k = 0; k < 5; ++k) acc += kKernel[k] * img.at(c, y, reflect_index(x + k - 2, w));
        tmp.at(c, y, x) = gain_x * acc;
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int k = 0; k < 5; ++k) acc += kKernel[k] * tmp.at(c, reflect_index(y + k - 2, h), x);
        out.at(c, y, x) = gain_y * acc;
      }
    }
  }
  return out;
}

int half_up(int n) { return (n + 1) / 2; }

}  // namespace

int max_pyramid_levels(int width, int height) {
  const int m = std::min(width, height);
  if (m < 1) return 0;
  return std::bit_width(static_cast<unsigned>(m));
}

Image pyr_down(const Image& img) {
  Image blurred = blur(img, 1.0);
  const int w = half_up(img.width());
  const int h = half_up(img.height());
  Image out(w, h, img.channels());
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(c, y, x) = blurred.at(c, 2 * y, 2 * x);
  return out;
}

Image pyr_up(const Image& img, int width, int height) {
  if (half_up(width) != img.width() || half_up(height) != img.height()) {
    throw InvalidArgument("pyr_up: target " + std::to_string(width) + "x" +
                          std::to_string(height) + " inconsistent with source " +
                          std::to_string(img.width()) + "x" + std::to_string(img.height()));
  }
  Image sparse(width, height, img.channels(), 0.0);
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) sparse.at(c, 2 * y, 2 * x) = img.at(c, y, x);
  return blur(sparse, 2.0);
}

std::vector<Image> build_gaussian_pyramid(const Image& img, int levels) {
  if (img.empty()) throw InvalidArgument("pyramid: empty image");
  if (levels < 2) throw InvalidArgument("pyramid: at least 2 levels required");
  const int cap = max_pyramid_levels(img.width(), img.height());
  if (levels > cap) {
    throw InvalidArgument("pyramid: " + std::to_string(levels) + " levels exceed the " +
                          std::to_string(cap) + " supported by a " +
                          std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                          " image");
  }
  std::vector<Image> g;
  g.reserve(static_cast<std::size_t>(levels));
  g.push_back(img);
  for (int k = 1; k < levels; ++k) g.push_back(pyr_down(g.back()));
  return g;
}

LaplacianPyramid build_laplacian_pyramid(const Image& img, int levels) {
  std::vector<Image> g = build_gaussian_pyramid(img, levels);
  LaplacianPyramid pyr;
  for (std::size_t k = 0; k + 1 < g.size(); ++k) {
    Image band = g[k];
    const Image up = pyr_up(g[k + 1], g[k].width(), g[k].height());
    auto dst = band.data();
    auto src = up.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= src[i];
    pyr.bands.push_back(std::move(band));
  }
  pyr.residual = std::move(g.back());
  return pyr;
}

Image reconstruct(const LaplacianPyramid& pyr) {
  if (pyr.residual.empty()) throw InvalidArgument("reconstruct: missing residual");
  Image cur = pyr.residual;
  for (auto it = pyr.bands.rbegin(); it != pyr.bands.rend(); ++it) {
    const Image& band = *it;
    if (band.channels() != cur.channels()) {
      throw InvalidArgument("reconstruct: channel count differs between levels");
    }
    Image up = pyr_up(cur, band.width(), band.height());
    auto dst = up.data();
    auto src = band.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    cur = std::move(up);
  }
  return cur;
}

}  // namespace paintdomain
