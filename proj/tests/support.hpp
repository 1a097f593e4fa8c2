#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "paintdomain/descriptors.hpp"
#include "paintdomain/image.hpp"
#include "paintdomain/random.hpp"

namespace testsupport {

using paintdomain::Image;
using paintdomain::Rng;

inline Image random_image(Rng& rng, int w, int h, int c) {
  Image img(w, h, c);
  for (double& v : img.data()) v = paintdomain::uniform01(rng);
  return img;
}

inline int random_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(paintdomain::uniform_index(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

/// W1 distance between two empirical distributions via their quantile
/// functions.
inline double emd(std::vector<double> a, std::vector<double> b) {
  std::ranges::sort(a);
  std::ranges::sort(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double p = 0.0, total = 0.0;
  while (i < a.size() && j < b.size()) {
    const double next = std::min((static_cast<double>(i) + 1) / na, (static_cast<double>(j) + 1) / nb);
    total += (next - p) * std::abs(a[i] - b[j]);
    p = next;
    if ((static_cast<double>(i) + 1) / na <= next) ++i;
    if ((static_cast<double>(j) + 1) / nb <= next) ++j;
  }
  return total;
}

inline std::vector<double> magnitudes(const Image& level, double anchor = 0.0) {
  std::vector<double> m;
  for (double v : level.data()) m.push_back(std::abs(v - anchor));
  return m;
}

/// Direct pHoG: per grid, per cell, per pixel; votes by triangular distance
/// to each bin center.
inline std::vector<double> phog_reference(const Image& img, const paintdomain::DescriptorConfig& cfg) {
  const Image g = paintdomain::to_grayscale(img);
  const int w = g.width(), h = g.height(), bins = cfg.hog_bins;
  const double bw = 180.0 / bins;
  auto px = [&](int y, int x) { return g.at(0, std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1)); };
  std::vector<double> out;
  for (int k : cfg.grid_levels) {
    for (int cy = 0; cy < k; ++cy) {
      for (int cx = 0; cx < k; ++cx) {
        std::vector<double> hist(static_cast<std::size_t>(bins), 0.0);
        const int y0 = cy * h / k, y1 = (cy + 1) * h / k;
        const int x0 = cx * w / k, x1 = (cx + 1) * w / k;
        for (int y = y0; y < y1; ++y) {
          for (int x = x0; x < x1; ++x) {
            const double dx = px(y, x + 1) - px(y, x - 1);
            const double dy = px(y + 1, x) - px(y - 1, x);
            const double mag = std::hypot(dx, dy);
            if (mag == 0.0) continue;
            double deg = std::atan2(dy, dx) * 180.0 / std::numbers::pi;
            deg = std::fmod(deg + 360.0, 180.0);
            for (int b = 0; b < bins; ++b) {
              double d = std::abs(deg - b * bw);
              d = std::min(d, 180.0 - d);
              hist[static_cast<std::size_t>(b)] += std::max(0.0, 1.0 - d / bw) * mag;
            }
          }
        }
        double sum = 0.0;
        for (double v : hist) sum += v;
        for (double v : hist) out.push_back(v / (sum + cfg.epsilon));
      }
    }
  }
  return out;
}

inline bool is_uniform_code(int code) {
  int transitions = 0;
  for (int p = 0; p < 8; ++p) transitions += ((code >> p) & 1) != ((code >> ((p + 1) % 8)) & 1);
  return transitions <= 2;
}

/// Direct pLBP: neighbors enumerated by explicit offsets, uniform bins by
/// ranking uniform codes.
inline std::vector<double> plbp_reference(const Image& img, const paintdomain::DescriptorConfig& cfg) {
  const Image g = paintdomain::to_grayscale(img);
  const int w = g.width(), h = g.height();
  std::vector<int> rank(256, 58);
  int next = 0;
  for (int c = 0; c < 256; ++c)
    if (is_uniform_code(c)) rank[static_cast<std::size_t>(c)] = next++;
  const int oy[8] = {-1, -1, -1, 0, 1, 1, 1, 0};
  const int ox[8] = {-1, 0, 1, 1, 1, 0, -1, -1};
  std::vector<double> out;
  for (int k : cfg.grid_levels) {
    for (int cy = 0; cy < k; ++cy) {
      for (int cx = 0; cx < k; ++cx) {
        std::vector<double> hist(59, 0.0);
        for (int y = std::max(1, cy * h / k); y < std::min(h - 1, (cy + 1) * h / k); ++y) {
          for (int x = std::max(1, cx * w / k); x < std::min(w - 1, (cx + 1) * w / k); ++x) {
            int code = 0;
            for (int p = 0; p < 8; ++p)
              if (g.at(0, y + oy[p], x + ox[p]) >= g.at(0, y, x)) code += 1 << p;
            hist[static_cast<std::size_t>(rank[static_cast<std::size_t>(code)])] += 1.0;
          }
        }
        double sum = 0.0;
        for (double v : hist) sum += v;
        for (double v : hist) out.push_back(v / (sum + cfg.epsilon));
      }
    }
  }
  return out;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("paintdomain_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testsupport
