#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "paintdomain/image.hpp"
#include "paintdomain/pyramid.hpp"

namespace paintdomain {

/// Histogram of coefficient magnitudes |v - g| over [lo, hi] with a
/// piecewise-linear CDF and inverse.
struct CoefficientHistogram {
  int bin_count = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
  /// Inclusive prefix sums of counts; rebuilt by finalize().
  std::vector<std::uint64_t> cumulative;

  /// Recomputes total and cumulative from counts.
  void finalize();

  double bin_width() const { return bin_count > 0 ? (hi - lo) / bin_count : 0.0; }
  int bin_of(double magnitude) const;
  /// Fraction of mass at or below `magnitude`, interpolated within the bin.
  double cdf(double magnitude) const;
  /// Smallest magnitude whose CDF reaches p; ties resolve to the lower bin.
  double inverse_cdf(double p) const;
};

enum class ColorMode { per_channel, luminance };

struct TransferParams {
  int levels = 7;
  int iterations = 10;
  int bins = 256;
  ColorMode color_mode = ColorMode::per_channel;
  /// Final clamp to [0,1]; disable to inspect the raw reconstruction.
  bool clamp_output = true;

  void validate() const;
};

/// Histogram of |v - anchor| over every sample of `level`, range [0, max].
CoefficientHistogram level_histogram(const Image& level, int bins, double anchor = 0.0);

/// Iterated remapping v <- g + sign(v - g) * t(|v - g|) where
/// t = CDF_ref^{-1}(CDF_current(.)) and the current histogram is rebuilt from
/// the level at every iteration. A level whose deviations never exceed 1e-12
/// is returned unchanged.
Image match_level(const Image& subject, const CoefficientHistogram& reference_hist,
                  int iterations, double anchor = 0.0);

/// Matches every band of `subject` to the corresponding band of `reference`
/// (anchor 0) and the residual about each residual's per-channel mean.
/// Both pyramids must be single-channel or share a channel count; channels
/// are matched independently.
LaplacianPyramid match_pyramid(const LaplacianPyramid& subject, const LaplacianPyramid& reference,
                               int bins, int iterations);

Image laplacian_style_transfer(const Image& subject, const Image& reference,
                               const TransferParams& params = {});

/// Stylizes (subject, reference) pairs on `threads` workers; output order
/// matches input order.
std::vector<Image> laplacian_style_transfer_batch(
    std::span<const std::pair<Image, Image>> pairs, const TransferParams& params, int threads);

}  // namespace paintdomain
