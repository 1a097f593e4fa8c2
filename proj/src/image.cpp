#include "paintdomain/image.hpp"

#include <algorithm>
#include <cmath>

namespace paintdomain {

namespace {

void check_dims(int width, int height, int channels) {
  if (width < 1 || height < 1) {
    throw InvalidArgument("image dimensions must be positive, got " + std::to_string(width) +
                          "x" + std::to_string(height));
  }
  if (channels != 1 && channels != 3) {
    throw InvalidArgument("unsupported channel count " + std::to_string(channels));
  }
}

}  // namespace

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  check_dims(width, height, channels);
  data_.assign(plane_size() * static_cast<std::size_t>(channels), fill);
}

Image::Image(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  check_dims(width, height, channels);
  if (data_.size() != plane_size() * static_cast<std::size_t>(channels)) {
    throw InvalidArgument("image data length " + std::to_string(data_.size()) +
                          " does not match " + std::to_string(width) + "x" +
                          std::to_string(height) + "x" + std::to_string(channels));
  }
}

Image Image::channel(int c) const {
  if (c < 0 || c >= channels_) throw InvalidArgument("channel index out of range");
  auto src = plane(c);
  return Image(width_, height_, 1, std::vector<double>(src.begin(), src.end()));
}

void Image::set_channel(int c, const Image& p) {
  if (c < 0 || c >= channels_) throw InvalidArgument("channel index out of range");
  if (p.width() != width_ || p.height() != height_ || p.channels() != 1) {
    throw InvalidArgument("set_channel: plane shape mismatch");
  }
  std::ranges::copy(p.plane(0), plane(c).begin());
}

bool Image::all_finite() const {
  return std::ranges::all_of(data_, [](double v) { return std::isfinite(v); });
}

Image to_grayscale(const Image& img) {
  if (img.channels() == 1) return img;
  if (img.channels() != 3) throw InvalidArgument("to_grayscale: unsupported channel count");
  Image out(img.width(), img.height(), 1);
  auto r = img.plane(0);
  auto g = img.plane(1);
  auto b = img.plane(2);
  auto dst = out.plane(0);
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
  }
  return out;
}

Image resize_bilinear(const Image& img, int width, int height) {
  if (width < 1 || height < 1) throw InvalidArgument("resize_bilinear: zero target dimension");
  if (img.empty()) throw InvalidArgument("resize_bilinear: empty image");
  if (width == img.width() && height == img.height()) return img;

  struct Tap {
    int i0, i1;
    double w1;
  };
  auto taps = [](int dst_n, int src_n) {
    std::vector<Tap> out(static_cast<std::size_t>(dst_n));
    const double scale = static_cast<double>(src_n) / dst_n;
    for (int d = 0; d < dst_n; ++d) {
      double s = (d + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(src_n - 1));
      int i0 = static_cast<int>(std::floor(s));
      int i1 = std::min(i0 + 1, src_n - 1);
      out[static_cast<std::size_t>(d)] = {i0, i1, s - i0};
    }
    return out;
  };
  const auto xs = taps(width, img.width());
  const auto ys = taps(height, img.height());

  Image out(width, height, img.channels());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < height; ++y) {
      const Tap& ty = ys[static_cast<std::size_t>(y)];
      for (int x = 0; x < width; ++x) {
        const Tap& tx = xs[static_cast<std::size_t>(x)];
        const double top = img.at(c, ty.i0, tx.i0) * (1.0 - tx.w1) + img.at(c, ty.i0, tx.i1) * tx.w1;
        const double bot = img.at(c, ty.i1, tx.i0) * (1.0 - tx.w1) + img.at(c, ty.i1, tx.i1) * tx.w1;
        out.at(c, y, x) = top * (1.0 - ty.w1) + bot * ty.w1;
      }
    }
  }
  return out;
}

Image clamp01(Image img) {
  for (double& v : img.data()) v = std::clamp(v, 0.0, 1.0);
  return img;
}

double max_abs_difference(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw InvalidArgument("max_abs_difference: shape mismatch");
  double m = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) m = std::max(m, std::abs(da[i] - db[i]));
  return m;
}

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace paintdomain
