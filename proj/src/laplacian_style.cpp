#include "paintdomain/laplacian_style.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "paintdomain/parallel.hpp"

namespace paintdomain {

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Levels whose deviations stay below this are rounding residue of a flat
// signal and are left untouched.
constexpr double kFlatLevel = 1e-12;

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

LaplacianPyramid channel_of(const LaplacianPyramid& pyr, int c) {
  LaplacianPyramid out;
  for (const Image& b : pyr.bands) out.bands.push_back(b.channel(c));
  out.residual = pyr.residual.channel(c);
  return out;
}

LaplacianPyramid match_single_channel(const LaplacianPyramid& s, const LaplacianPyramid& r,
                                      int bins, int iterations) {
  LaplacianPyramid out;
  for (std::size_t k = 0; k < s.bands.size(); ++k) {
    const CoefficientHistogram ref = level_histogram(r.bands[k], bins, 0.0);
    out.bands.push_back(match_level(s.bands[k], ref, iterations, 0.0));
  }
  const double s_anchor = mean_of(s.residual.data());
  const double r_anchor = mean_of(r.residual.data());
  const CoefficientHistogram ref = level_histogram(r.residual, bins, r_anchor);
  out.residual = match_level(s.residual, ref, iterations, s_anchor);
  return out;
}

Image transfer_single_channel(const Image& s, const Image& r, const TransferParams& p) {
  const LaplacianPyramid sp = build_laplacian_pyramid(s, p.levels);
  const LaplacianPyramid rp = build_laplacian_pyramid(r, p.levels);
  return reconstruct(match_single_channel(sp, rp, p.bins, p.iterations));
}

}  // namespace

int CoefficientHistogram::bin_of(double magnitude) const {
  if (!(hi > lo)) return 0;
  const double pos = (magnitude - lo) / (hi - lo) * bin_count;
  if (pos <= 0.0) return 0;
  return std::min(static_cast<int>(pos), bin_count - 1);
}

void CoefficientHistogram::finalize() {
  cumulative.resize(counts.size());
  std::inclusive_scan(counts.begin(), counts.end(), cumulative.begin());
  total = cumulative.empty() ? 0 : cumulative.back();
}

double CoefficientHistogram::cdf(double magnitude) const {
  if (total == 0) return 0.0;
  if (magnitude <= lo) return 0.0;
  if (magnitude >= hi) return 1.0;
  const int b = bin_of(magnitude);
  const auto bi = static_cast<std::size_t>(b);
  const double frac = std::clamp((magnitude - lo) / bin_width() - b, 0.0, 1.0);
  const std::uint64_t before = bi > 0 ? cumulative[bi - 1] : 0;
  return (static_cast<double>(before) + static_cast<double>(counts[bi]) * frac) /
         static_cast<double>(total);
}

double CoefficientHistogram::inverse_cdf(double p) const {
  if (total == 0) return lo;
  const double target = std::clamp(p, 0.0, 1.0) * static_cast<double>(total);
  if (target <= 0.0) return lo;
  const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), target,
                                   [](std::uint64_t c, double t) { return static_cast<double>(c) < t; });
  if (it == cumulative.end()) return hi;
  const auto bi = static_cast<std::size_t>(it - cumulative.begin());
  const std::uint64_t before = bi > 0 ? cumulative[bi - 1] : 0;
  const std::uint64_t n = counts[bi];
  const double frac = n > 0 ? (target - static_cast<double>(before)) / static_cast<double>(n) : 0.0;
  return lo + (static_cast<double>(bi) + frac) * bin_width();
}

void TransferParams::validate() const {
  if (levels < 2) throw InvalidArgument("levels must be >= 2");
  if (iterations < 1) throw InvalidArgument("iterations must be >= 1");
  if (bins < 2) throw InvalidArgument("bins must be >= 2");
}

CoefficientHistogram level_histogram(const Image& level, int bins, double anchor) {
  if (level.empty()) throw InvalidArgument("level_histogram: empty level");
  if (bins < 2) throw InvalidArgument("level_histogram: bins must be >= 2");
  CoefficientHistogram h;
  h.bin_count = bins;
  h.lo = 0.0;
  for (double v : level.data()) h.hi = std::max(h.hi, std::abs(v - anchor));
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double v : level.data()) ++h.counts[static_cast<std::size_t>(h.bin_of(std::abs(v - anchor)))];
  h.finalize();
  return h;
}

Image match_level(const Image& subject, const CoefficientHistogram& reference_hist, int iterations,
                  double anchor) {
  if (reference_hist.total == 0) throw InvalidArgument("match_level: empty reference histogram");
  if (iterations < 0) throw InvalidArgument("match_level: negative iteration count");
  Image cur = subject;
  for (int n = 0; n < iterations; ++n) {
    const CoefficientHistogram own = level_histogram(cur, reference_hist.bin_count, anchor);
    if (own.hi <= kFlatLevel) break;
    for (double& v : cur.data()) {
      const double d = v - anchor;
      if (d == 0.0) continue;
      v = anchor + sign_of(d) * reference_hist.inverse_cdf(own.cdf(std::abs(d)));
    }
  }
  return cur;
}

LaplacianPyramid match_pyramid(const LaplacianPyramid& subject, const LaplacianPyramid& reference,
                               int bins, int iterations) {
  if (subject.bands.size() != reference.bands.size()) {
    throw InvalidArgument("match_pyramid: level count mismatch");
  }
  const int ch = subject.residual.channels();
  if (reference.residual.channels() != ch) throw InvalidArgument("match_pyramid: channel mismatch");
  if (ch == 1) return match_single_channel(subject, reference, bins, iterations);

  std::vector<LaplacianPyramid> per;
  for (int c = 0; c < ch; ++c) {
    per.push_back(match_single_channel(channel_of(subject, c), channel_of(reference, c), bins, iterations));
  }
  LaplacianPyramid out = subject;
  for (int c = 0; c < ch; ++c) {
    for (std::size_t k = 0; k < out.bands.size(); ++k) out.bands[k].set_channel(c, per[static_cast<std::size_t>(c)].bands[k]);
    out.residual.set_channel(c, per[static_cast<std::size_t>(c)].residual);
  }
  return out;
}

Image laplacian_style_transfer(const Image& subject, const Image& reference,
                               const TransferParams& params) {
  params.validate();
  if (subject.empty() || reference.empty()) throw InvalidArgument("style transfer: empty image");

  Image out;
  if (params.color_mode == ColorMode::luminance) {
    const Image ys = to_grayscale(subject);
    const Image yr = to_grayscale(reference);
    const Image y_new = transfer_single_channel(ys, yr, params);
    out = subject;
    for (int c = 0; c < out.channels(); ++c) {
      auto dst = out.plane(c);
      auto a = y_new.plane(0);
      auto b = ys.plane(0);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += a[i] - b[i];
    }
  } else {
    if (subject.channels() != reference.channels()) {
      throw InvalidArgument("style transfer: subject has " + std::to_string(subject.channels()) +
                            " channels, reference has " + std::to_string(reference.channels()));
    }
    out = Image(subject.width(), subject.height(), subject.channels());
    for (int c = 0; c < subject.channels(); ++c) {
      out.set_channel(c, transfer_single_channel(subject.channel(c), reference.channel(c), params));
    }
  }
  return params.clamp_output ? clamp01(std::move(out)) : out;
}

std::vector<Image> laplacian_style_transfer_batch(std::span<const std::pair<Image, Image>> pairs,
                                                  const TransferParams& params, int threads) {
  std::vector<Image> out(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    out[i] = laplacian_style_transfer(pairs[i].first, pairs[i].second, params);
  });
  return out;
}

}  // namespace paintdomain
