#include <cmath>

#include "doctest.h"
#include "paintdomain/binary_io.hpp"
#include "paintdomain/image_io.hpp"
#include "paintdomain/pyramid.hpp"
#include "support.hpp"

using namespace paintdomain;
using testsupport::random_image;
using testsupport::random_int;

TEST_CASE("image construction validates shape") {
  CHECK_THROWS_AS(Image(0, 3, 1), InvalidArgument);
  CHECK_THROWS_AS(Image(3, 3, 2), InvalidArgument);
  CHECK_THROWS_AS(Image(2, 2, 1, std::vector<double>(3)), InvalidArgument);
  Image img(4, 3, 3, 0.25);
  CHECK(img.size() == 36);
  CHECK(img.at(2, 2, 3) == 0.25);
}

TEST_CASE("reflect_index mirrors without repeating the edge") {
  CHECK(reflect_index(-1, 5) == 1);
  CHECK(reflect_index(-2, 5) == 2);
  CHECK(reflect_index(5, 5) == 3);
  CHECK(reflect_index(6, 5) == 2);
  CHECK(reflect_index(3, 5) == 3);
  CHECK(reflect_index(-7, 1) == 0);
  for (int i = -20; i < 20; ++i) {
    const int r = reflect_index(i, 4);
    CHECK(r >= 0);
    CHECK(r < 4);
  }
}

TEST_CASE("bilinear upscaling of a checkerboard follows u + v - 2uv") {
  Image board(2, 2, 1, std::vector<double>{0, 1, 1, 0});
  const Image up = resize_bilinear(board, 4, 4);
  const double coord[4] = {0.0, 0.25, 0.75, 1.0};
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      const double u = coord[x], v = coord[y];
      CHECK(up.at(0, y, x) == doctest::Approx(u + v - 2 * u * v).epsilon(1e-12));
    }
  }
}

TEST_CASE("resize to the same size is the identity") {
  Rng rng(3);
  const Image img = random_image(rng, 7, 5, 3);
  CHECK(max_abs_difference(resize_bilinear(img, 7, 5), img) == 0.0);
}

TEST_CASE("grayscale uses Rec.601 weights") {
  Image img(1, 1, 3, std::vector<double>{1.0, 0.5, 0.25});
  CHECK(to_grayscale(img).at(0, 0, 0) == doctest::Approx(0.299 + 0.5 * 0.587 + 0.25 * 0.114));
}

TEST_CASE("level cap follows the smallest side") {
  CHECK(max_pyramid_levels(17, 17) == 5);
  CHECK(max_pyramid_levels(224, 100) == 7);
  CHECK(max_pyramid_levels(1, 50) == 1);
  CHECK(max_pyramid_levels(64, 64) == 7);
}

TEST_CASE("pyramid levels have ceil-halved sizes") {
  Rng rng(1);
  const Image img = random_image(rng, 37, 22, 1);
  const auto pyr = build_laplacian_pyramid(img, 4);
  REQUIRE(pyr.bands.size() == 3);
  CHECK(pyr.bands[0].width() == 37);
  CHECK(pyr.bands[1].width() == 19);
  CHECK(pyr.bands[2].width() == 10);
  CHECK(pyr.bands[2].height() == 6);
  CHECK(pyr.residual.width() == 5);
  CHECK(pyr.residual.height() == 3);
}

TEST_CASE("pyramid rejects unsupported level counts") {
  const Image img(16, 16, 1);
  CHECK_THROWS_AS(build_laplacian_pyramid(img, 1), InvalidArgument);
  CHECK_THROWS_AS(build_laplacian_pyramid(img, 6), InvalidArgument);
  CHECK_NOTHROW(build_laplacian_pyramid(img, 5));
  CHECK_THROWS_AS(pyr_up(Image(3, 3, 1), 9, 6), InvalidArgument);
}

TEST_CASE("blur and decimation preserve constants") {
  const Image c(13, 9, 3, 0.4);
  const Image d = pyr_down(c);
  for (double v : d.data()) CHECK(v == doctest::Approx(0.4).epsilon(1e-14));
  const Image u = pyr_up(d, 13, 9);
  for (double v : u.data()) CHECK(v == doctest::Approx(0.4).epsilon(1e-14));
  const auto pyr = build_laplacian_pyramid(c, 4);
  for (const auto& b : pyr.bands)
    for (double v : b.data()) CHECK(std::abs(v) < 1e-14);
}

TEST_CASE("property: reconstruction inverts decomposition") {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const int w = random_int(rng, 2, 70);
    const int h = random_int(rng, 2, 70);
    const int c = random_int(rng, 0, 1) ? 3 : 1;
    const int levels = random_int(rng, 2, max_pyramid_levels(w, h) < 2 ? 2 : max_pyramid_levels(w, h));
    if (levels > max_pyramid_levels(w, h)) continue;
    const Image img = random_image(rng, w, h, c);
    CHECK(max_abs_difference(reconstruct(build_laplacian_pyramid(img, levels)), img) <= 1e-12);
  }
}

TEST_CASE("PNG round trip quantizes with round-half-up") {
  CHECK(quantize_u8(-0.1) == 0);
  CHECK(quantize_u8(1.5) == 255);
  CHECK(quantize_u8(0.5 / 255.0) == 1);
  CHECK(quantize_u8(0.49 / 255.0) == 0);
  const auto dir = testsupport::fresh_dir("png");
  Rng rng(2);
  Image img = random_image(rng, 9, 6, 3);
  for (double& v : img.data()) v = quantize_u8(v) / 255.0;
  save_png(img, dir / "a.png");
  const Image back = load_image(dir / "a.png");
  CHECK(back.same_shape(img));
  CHECK(max_abs_difference(back, img) < 1e-12);
  Image gray = random_image(rng, 5, 4, 1);
  save_png(gray, dir / "g.png");
  CHECK(load_image(dir / "g.png").channels() == 1);
}

TEST_CASE("image loading reports missing and malformed files") {
  const auto dir = testsupport::fresh_dir("badimg");
  CHECK_THROWS_AS(load_image(dir / "nope.png"), IoError);
  write_file_atomic(dir / "junk.png", "not an image");
  CHECK_THROWS_AS(load_image(dir / "junk.png"), IoError);
}

TEST_CASE("pyramid file round trip is lossless and validates input") {
  Rng rng(5);
  const auto pyr = build_laplacian_pyramid(random_image(rng, 20, 13, 3), 3);
  const std::string bytes = encode_pyramid(pyr);
  const auto back = decode_pyramid(bytes);
  REQUIRE(back.bands.size() == pyr.bands.size());
  for (std::size_t k = 0; k < pyr.bands.size(); ++k) CHECK(back.bands[k] == pyr.bands[k]);
  CHECK(back.residual == pyr.residual);
  CHECK_THROWS_AS(decode_pyramid(bytes.substr(0, bytes.size() - 3)), IoError);
  CHECK_THROWS_AS(decode_pyramid("XXXXXXXX" + bytes.substr(8)), IoError);
}

TEST_CASE("atomic writes leave no temporary behind") {
  const auto dir = testsupport::fresh_dir("atomic");
  write_file_atomic(dir / "sub" / "f.txt", "hello");
  CHECK(read_file(dir / "sub" / "f.txt") == "hello");
  CHECK_FALSE(std::filesystem::exists(dir / "sub" / "f.txt.tmp"));
}
