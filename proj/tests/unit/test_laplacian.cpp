#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "paintdomain/laplacian_style.hpp"
#include "paintdomain/pyramid.hpp"
#include "support.hpp"

using namespace paintdomain;
using testsupport::emd;
using testsupport::magnitudes;
using testsupport::random_image;

namespace {

Image from_values(std::vector<double> v) {
  const int n = static_cast<int>(v.size());
  return Image(n, 1, 1, std::move(v));
}

}  // namespace

TEST_CASE("histogram of {-1, 0, 1} with two bins") {
  const auto h = level_histogram(from_values({-1, 0, 1}), 2);
  CHECK(h.lo == 0.0);
  CHECK(h.hi == 1.0);
  CHECK(h.counts[0] == 1);
  CHECK(h.counts[1] == 2);
  CHECK(h.total == 3);
}

TEST_CASE("all-zero level puts every sample in bin 0") {
  const auto h = level_histogram(Image(5, 4, 1, 0.0), 16);
  CHECK(h.counts[0] == 20);
  CHECK(h.total == 20);
  CHECK_THROWS_AS(level_histogram(Image(), 4), InvalidArgument);
}

TEST_CASE("property: histogram conservation and monotone CDF") {
  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    Image img = random_image(rng, 13, 11, 1);
    for (double& v : img.data()) v = (v - 0.5) * 3.0;
    const auto h = level_histogram(img, 32);
    CHECK(h.total == img.size());
    double prev = 0.0;
    for (int i = 0; i <= 100; ++i) {
      const double c = h.cdf(h.hi * i / 100.0);
      CHECK(c >= prev - 1e-15);
      prev = c;
    }
    CHECK(h.cdf(h.hi) == 1.0);
    for (double p : {0.1, 0.37, 0.5, 0.93}) CHECK(h.cdf(h.inverse_cdf(p)) == doctest::Approx(p).epsilon(1e-9));
  }
}

TEST_CASE("self-matching is a fixed point within one bin width") {
  Rng rng(8);
  Image level = random_image(rng, 32, 32, 1);
  for (double& v : level.data()) v -= 0.5;
  const auto h = level_histogram(level, 64);
  const Image out = match_level(level, h, 10);
  CHECK(max_abs_difference(out, level) <= h.bin_width());
}

TEST_CASE("constant level at the anchor stays unchanged") {
  const Image zero(8, 8, 1, 0.0);
  Rng rng(9);
  const auto ref = level_histogram(random_image(rng, 8, 8, 1), 16);
  CHECK(match_level(zero, ref, 10) == zero);
}

TEST_CASE("uniform [0,1] magnitudes matched to uniform [0,2] double") {
  Rng rng(10);
  const int n = 20000;
  std::vector<double> s(n), r(n);
  for (int i = 0; i < n; ++i) {
    s[static_cast<std::size_t>(i)] = uniform01(rng);
    r[static_cast<std::size_t>(i)] = 2.0 * uniform01(rng);
  }
  const Image subject = from_values(s);
  const Image out = match_level(subject, level_histogram(from_values(r), 256), 10);
  // Sort-based exact matching maps the k-th smallest subject value to the
  // k-th smallest reference value.
  std::vector<std::size_t> order(s.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::ranges::sort(order, [&](std::size_t a, std::size_t b) { return s[a] < s[b]; });
  std::vector<double> sorted_r = r;
  std::ranges::sort(sorted_r);
  double worst_oracle = 0.0, worst_closed = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const double got = out.data()[order[k]];
    worst_oracle = std::max(worst_oracle, std::abs(got - sorted_r[k]));
    worst_closed = std::max(worst_closed, std::abs(got - 2.0 * s[order[k]]));
  }
  CHECK(worst_oracle < 0.05);
  CHECK(worst_closed < 0.05);
}

TEST_CASE("matching preserves the sign about the anchor") {
  Rng rng(12);
  Image s = random_image(rng, 16, 16, 1);
  Image r = random_image(rng, 16, 16, 1);
  for (double& v : s.data()) v = (v - 0.5) * 0.2;
  for (double& v : r.data()) v = (v - 0.5) * 4.0;
  const Image out = match_level(s, level_histogram(r, 64), 10);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.data()[i] != 0.0) CHECK((s.data()[i] > 0) == (out.data()[i] > 0));
  }
}

TEST_CASE("degenerate reference collapses magnitudes to one value") {
  const Image ref(6, 6, 1, 0.5);
  const auto h = level_histogram(ref, 8);
  Rng rng(13);
  Image s = random_image(rng, 6, 6, 1);
  const Image out = match_level(s, h, 3);
  for (double v : out.data()) CHECK(std::abs(v) <= 0.5 + 1e-12);
}

TEST_CASE("self-transfer reproduces the subject") {
  Rng rng(14);
  for (int t = 0; t < 5; ++t) {
    const Image s = random_image(rng, 40, 33, 3);
    TransferParams p;
    p.levels = 5;
    p.clamp_output = false;
    CHECK(max_abs_difference(laplacian_style_transfer(s, s, p), s) <= 2.0 / 256.0);
  }
}

TEST_CASE("constant subject gives a constant output") {
  Rng rng(15);
  const Image s(32, 32, 1, 0.3);
  const Image r = random_image(rng, 32, 32, 1);
  TransferParams p;
  p.levels = 5;
  const Image out = laplacian_style_transfer(s, r, p);
  const double first = out.data()[0];
  for (double v : out.data()) CHECK(v == doctest::Approx(first).epsilon(1e-12));
}

TEST_CASE("band statistics move toward the reference") {
  Rng rng(16);
  Image s = random_image(rng, 32, 32, 1);
  Image r = random_image(rng, 32, 32, 1);
  for (double& v : r.data()) v = v * v * v;
  const auto sp = build_laplacian_pyramid(s, 4);
  const auto rp = build_laplacian_pyramid(r, 4);
  const auto mp = match_pyramid(sp, rp, 256, 10);
  for (std::size_t k = 0; k < sp.bands.size(); ++k) {
    const double before = emd(magnitudes(sp.bands[k]), magnitudes(rp.bands[k]));
    const double after = emd(magnitudes(mp.bands[k]), magnitudes(rp.bands[k]));
    CHECK(after <= 0.1 * before);
  }
}

TEST_CASE("transfer parameter and channel validation") {
  const Image rgb(32, 32, 3, 0.5), gray(32, 32, 1, 0.5);
  TransferParams p;
  p.levels = 5;
  CHECK_THROWS_AS(laplacian_style_transfer(rgb, gray, p), InvalidArgument);
  p.color_mode = ColorMode::luminance;
  CHECK_NOTHROW(laplacian_style_transfer(rgb, gray, p));
  p.levels = 7;
  CHECK_THROWS_AS(laplacian_style_transfer(rgb, rgb, p), InvalidArgument);
  TransferParams bad;
  bad.bins = 1;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = {};
  bad.iterations = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("luminance mode keeps chroma differences") {
  Rng rng(17);
  const Image s = random_image(rng, 32, 32, 3);
  const Image r = random_image(rng, 32, 32, 3);
  TransferParams p;
  p.levels = 4;
  p.color_mode = ColorMode::luminance;
  p.clamp_output = false;
  const Image out = laplacian_style_transfer(s, r, p);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      CHECK(out.at(0, y, x) - out.at(1, y, x) == doctest::Approx(s.at(0, y, x) - s.at(1, y, x)).epsilon(1e-9));
}

TEST_CASE("transfer is deterministic and batch order preserving") {
  Rng rng(18);
  const Image a = random_image(rng, 24, 24, 3), b = random_image(rng, 24, 24, 3);
  TransferParams p;
  p.levels = 4;
  const Image x = laplacian_style_transfer(a, b, p);
  CHECK(laplacian_style_transfer(a, b, p) == x);
  std::vector<std::pair<Image, Image>> pairs{{a, b}, {b, a}, {a, b}};
  const auto batch = laplacian_style_transfer_batch(pairs, p, 3);
  CHECK(batch[0] == x);
  CHECK(batch[2] == x);
  CHECK(batch[1] == laplacian_style_transfer(b, a, p));
}
