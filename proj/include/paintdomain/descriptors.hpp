#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "paintdomain/image.hpp"

namespace paintdomain {

enum class DescriptorId : std::uint32_t { none = 0, phog = 1, plbp = 2 };

DescriptorId parse_descriptor(const std::string& name);
std::string descriptor_name(DescriptorId id);

/// Spatial pyramid of k x k grids (coarse to fine) over which per-cell
/// histograms are concatenated.
struct DescriptorConfig {
  std::vector<int> grid_levels{1, 2, 4};
  /// Unsigned orientation bins over [0, 180), centered at multiples of
  /// 180 / hog_bins.
  int hog_bins = 9;
  /// Per-cell L1 normalization h / (sum h + epsilon).
  double epsilon = 1e-6;

  void validate() const;
  int cell_count() const;
  std::string fingerprint(DescriptorId id) const;
};

inline constexpr int kLbpBins = 59;

struct FeatureVector {
  std::vector<double> values;
  DescriptorId descriptor = DescriptorId::none;
  std::string fingerprint;
};

std::size_t descriptor_length(DescriptorId id, const DescriptorConfig& cfg);

/// Pixel range [begin, end) of cell `index` out of `cells` along an axis of
/// length n.
std::pair<int, int> cell_span(int n, int cells, int index);

/// 8-neighbor radius-1 code at (y, x), bit p set when neighbor p >= center.
/// Neighbors run clockwise from the top-left.
std::uint8_t lbp_code(const Image& gray, int y, int x);

/// Maps the 58 codes with at most two circular 0/1 transitions to 0..57 in
/// ascending code order and everything else to 58.
int uniform_lbp_bin(std::uint8_t code);

/// Pyramidal histogram of oriented gradients. Centered [-1,0,1] differences
/// with edge clamping; votes split linearly between adjacent orientation
/// bins (circularly) and weighted by gradient magnitude.
FeatureVector phog(const Image& img, const DescriptorConfig& cfg = {});

/// Pyramidal uniform LBP. The 1-pixel image border produces no codes.
FeatureVector plbp(const Image& img, const DescriptorConfig& cfg = {});

FeatureVector extract_descriptor(DescriptorId id, const Image& img, const DescriptorConfig& cfg = {});

}  // namespace paintdomain
