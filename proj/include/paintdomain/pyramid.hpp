#pragma once

#include <vector>

#include "paintdomain/image.hpp"

namespace paintdomain {

/// Band-pass levels (finest first) plus the low-pass residual. Level k has
/// dimensions (ceil(w / 2^k), ceil(h / 2^k)).
struct LaplacianPyramid {
  std::vector<Image> bands;
  Image residual;

  int levels() const { return static_cast<int>(bands.size()) + 1; }
};

/// Largest level count an image of the given size supports:
/// floor(log2(min(width, height))) + 1.
int max_pyramid_levels(int width, int height);

/// One 5-tap [1,4,6,4,1]/16 blur followed by 2x decimation (ceil halving).
Image pyr_down(const Image& img);

/// Zero insertion into a (width, height) grid followed by the same kernel
/// scaled by 2 per axis.
Image pyr_up(const Image& img, int width, int height);

std::vector<Image> build_gaussian_pyramid(const Image& img, int levels);

LaplacianPyramid build_laplacian_pyramid(const Image& img, int levels);

Image reconstruct(const LaplacianPyramid& pyr);

}  // namespace paintdomain
