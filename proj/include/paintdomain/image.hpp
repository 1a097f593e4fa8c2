#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace paintdomain {

/// Thrown for any contract violation on input values (bad dims, bad ranges,
/// unsupported options). Runtime I/O failures use IoError.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Channel-planar, row-major floating point raster. Nominal range is [0,1];
/// band-pass pyramid levels and gradients may hold negative values.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);
  Image(int width, int height, int channels, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t plane_size() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int c, int y, int x) { return data_[index(c, y, x)]; }
  double at(int c, int y, int x) const { return data_[index(c, y, x)]; }

  std::span<double> plane(int c) {
    return {data_.data() + static_cast<std::size_t>(c) * plane_size(), plane_size()};
  }
  std::span<const double> plane(int c) const {
    return {data_.data() + static_cast<std::size_t>(c) * plane_size(), plane_size()};
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double> release() && { return std::move(data_); }

  /// Single-channel copy of channel c.
  Image channel(int c) const;
  void set_channel(int c, const Image& plane);

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_ &&
           channels_ == other.channels_;
  }
  bool all_finite() const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(height_) +
            static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Rec.601 luma; identity on single-channel images.
Image to_grayscale(const Image& img);

/// Bilinear resampling with pixel-center alignment and edge clamping.
Image resize_bilinear(const Image& img, int width, int height);

/// Clamp every sample to [0,1].
Image clamp01(Image img);

double max_abs_difference(const Image& a, const Image& b);

/// Mirror index into [0, n) without duplicating the edge sample
/// (-1 -> 1, n -> n-2). n == 1 always maps to 0.
int reflect_index(int i, int n);

}  // namespace paintdomain
