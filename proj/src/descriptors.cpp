#include "paintdomain/descriptors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

namespace paintdomain {

namespace {

constexpr std::array<std::array<int, 2>, 8> kNeighbors = {{
    {-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1},
}};

const std::array<int, 256>& uniform_table() {
  static const std::array<int, 256> table = [] {
    std::array<int, 256> t{};
    int next = 0;
    for (int code = 0; code < 256; ++code) {
      const auto c = static_cast<std::uint8_t>(code);
      const auto rotated = static_cast<std::uint8_t>((c >> 1) | (c << 7));
      t[static_cast<std::size_t>(code)] = std::popcount(static_cast<unsigned>(c ^ rotated)) <= 2 ? next++ : 58;
    }
    return t;
  }();
  return table;
}

void check_size(const Image& img, const DescriptorConfig& cfg) {
  cfg.validate();
  const int finest = *std::ranges::max_element(cfg.grid_levels);
  const int need = std::max(8, finest);
  if (img.width() < need || img.height() < need) {
    throw InvalidArgument("descriptor: image " + std::to_string(img.width()) + "x" +
                          std::to_string(img.height()) + " too small (need at least " + std::to_string(need) +
                          "x" + std::to_string(need) + ")");
  }
}

// Accumulates per-pixel contributions into every pyramid cell; `bins` is the
// histogram length per cell.
class CellAccumulator {
 public:
  CellAccumulator(const Image& img, const DescriptorConfig& cfg, int bins)
      : cfg_(cfg), bins_(bins), width_(img.width()), height_(img.height()) {
    hist_.assign(static_cast<std::size_t>(cfg.cell_count()) * static_cast<std::size_t>(bins), 0.0);
    for (int k : cfg.grid_levels) {
      std::vector<int> cx(static_cast<std::size_t>(width_)), cy(static_cast<std::size_t>(height_));
      for (int j = 0; j < k; ++j) {
        auto [x0, x1] = cell_span(width_, k, j);
        for (int x = x0; x < x1; ++x) cx[static_cast<std::size_t>(x)] = j;
        auto [y0, y1] = cell_span(height_, k, j);
        for (int y = y0; y < y1; ++y) cy[static_cast<std::size_t>(y)] = j;
      }
      col_cell_.push_back(std::move(cx));
      row_cell_.push_back(std::move(cy));
    }
  }

  void add(int y, int x, int bin, double weight) {
    std::size_t offset = 0;
    for (std::size_t g = 0; g < cfg_.grid_levels.size(); ++g) {
      const int k = cfg_.grid_levels[g];
      const std::size_t cell = offset + static_cast<std::size_t>(row_cell_[g][static_cast<std::size_t>(y)] * k +
                                                                 col_cell_[g][static_cast<std::size_t>(x)]);
      hist_[cell * static_cast<std::size_t>(bins_) + static_cast<std::size_t>(bin)] += weight;
      offset += static_cast<std::size_t>(k) * static_cast<std::size_t>(k);
    }
  }

  std::vector<double> normalized() && {
    for (std::size_t c = 0; c < hist_.size(); c += static_cast<std::size_t>(bins_)) {
      double sum = 0.0;
      for (int b = 0; b < bins_; ++b) sum += hist_[c + static_cast<std::size_t>(b)];
      for (int b = 0; b < bins_; ++b) hist_[c + static_cast<std::size_t>(b)] /= sum + cfg_.epsilon;
    }
    return std::move(hist_);
  }

 private:
  const DescriptorConfig& cfg_;
  int bins_;
  int width_;
  int height_;
  std::vector<std::vector<int>> col_cell_;
  std::vector<std::vector<int>> row_cell_;
  std::vector<double> hist_;
};

}  // namespace

DescriptorId parse_descriptor(const std::string& name) {
  if (name == "phog") return DescriptorId::phog;
  if (name == "plbp") return DescriptorId::plbp;
  throw InvalidArgument("unknown descriptor '" + name + "' (expected phog or plbp)");
}

std::string descriptor_name(DescriptorId id) {
  switch (id) {
    case DescriptorId::phog:
      return "phog";
    case DescriptorId::plbp:
      return "plbp";
    case DescriptorId::none:
      break;
  }
  return "none";
}

void DescriptorConfig::validate() const {
  if (grid_levels.empty()) throw InvalidArgument("descriptor config: no grid levels");
  if (std::ranges::any_of(grid_levels, [](int k) { return k < 1; })) {
    throw InvalidArgument("descriptor config: grid sizes must be positive");
  }
  if (hog_bins < 2) throw InvalidArgument("descriptor config: hog_bins must be >= 2");
  if (!(epsilon > 0.0)) throw InvalidArgument("descriptor config: epsilon must be positive");
}

int DescriptorConfig::cell_count() const {
  int n = 0;
  for (int k : grid_levels) n += k * k;
  return n;
}

std::string DescriptorConfig::fingerprint(DescriptorId id) const {
  std::ostringstream s;
  s << descriptor_name(id) << ";grid=";
  for (std::size_t i = 0; i < grid_levels.size(); ++i) s << (i ? "," : "") << grid_levels[i];
  if (id == DescriptorId::phog) s << ";bins=" << hog_bins;
  if (id == DescriptorId::plbp) s << ";lbp=u2r1";
  s << ";eps=" << epsilon;
  return s.str();
}

std::size_t descriptor_length(DescriptorId id, const DescriptorConfig& cfg) {
  const auto cells = static_cast<std::size_t>(cfg.cell_count());
  switch (id) {
    case DescriptorId::phog:
      return cells * static_cast<std::size_t>(cfg.hog_bins);
    case DescriptorId::plbp:
      return cells * kLbpBins;
    case DescriptorId::none:
      break;
  }
  throw InvalidArgument("descriptor_length: no descriptor selected");
}

std::pair<int, int> cell_span(int n, int cells, int index) {
  const auto lo = static_cast<int>(static_cast<long long>(index) * n / cells);
  const auto hi = static_cast<int>(static_cast<long long>(index + 1) * n / cells);
  return {lo, hi};
}

std::uint8_t lbp_code(const Image& gray, int y, int x) {
  const double center = gray.at(0, y, x);
  unsigned code = 0;
  for (std::size_t p = 0; p < kNeighbors.size(); ++p) {
    if (gray.at(0, y + kNeighbors[p][0], x + kNeighbors[p][1]) >= center) code |= 1u << p;
  }
  return static_cast<std::uint8_t>(code);
}

int uniform_lbp_bin(std::uint8_t code) { return uniform_table()[code]; }

FeatureVector phog(const Image& img, const DescriptorConfig& cfg) {
  check_size(img, cfg);
  const Image gray = to_grayscale(img);
  const int w = gray.width();
  const int h = gray.height();
  const int bins = cfg.hog_bins;
  const double bin_width = 180.0 / bins;
  CellAccumulator acc(gray, cfg, bins);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = gray.at(0, y, std::min(x + 1, w - 1)) - gray.at(0, y, std::max(x - 1, 0));
      const double dy = gray.at(0, std::min(y + 1, h - 1), x) - gray.at(0, std::max(y - 1, 0), x);
      const double mag = std::sqrt(dx * dx + dy * dy);
      if (mag == 0.0) continue;
      double theta = std::atan2(dy, dx) * (180.0 / std::numbers::pi);
      if (theta < 0.0) theta += 180.0;
      if (theta >= 180.0) theta -= 180.0;
      const double pos = theta / bin_width;
      const double base = std::floor(pos);
      const double frac = pos - base;
      const int b0 = static_cast<int>(base) % bins;
      const int b1 = (b0 + 1) % bins;
      acc.add(y, x, b0, (1.0 - frac) * mag);
      acc.add(y, x, b1, frac * mag);
    }
  }
  return {std::move(acc).normalized(), DescriptorId::phog, cfg.fingerprint(DescriptorId::phog)};
}

FeatureVector plbp(const Image& img, const DescriptorConfig& cfg) {
  check_size(img, cfg);
  const Image gray = to_grayscale(img);
  CellAccumulator acc(gray, cfg, kLbpBins);
  for (int y = 1; y + 1 < gray.height(); ++y) {
    for (int x = 1; x + 1 < gray.width(); ++x) acc.add(y, x, uniform_lbp_bin(lbp_code(gray, y, x)), 1.0);
  }
  return {std::move(acc).normalized(), DescriptorId::plbp, cfg.fingerprint(DescriptorId::plbp)};
}

FeatureVector extract_descriptor(DescriptorId id, const Image& img, const DescriptorConfig& cfg) {
  switch (id) {
    case DescriptorId::phog:
      return phog(img, cfg);
    case DescriptorId::plbp:
      return plbp(img, cfg);
    case DescriptorId::none:
      break;
  }
  throw InvalidArgument("extract_descriptor: no descriptor selected");
}

}  // namespace paintdomain
