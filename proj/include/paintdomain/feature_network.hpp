#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "paintdomain/image.hpp"

namespace paintdomain {

/// maps x height x width activations, map-planar row-major.
struct Tensor3 {
  int maps = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(int m, int h, int w, double fill = 0.0)
      : maps(m), height(h), width(w),
        data(static_cast<std::size_t>(m) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {}

  std::size_t spatial() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
  double& at(int m, int y, int x) { return data[(static_cast<std::size_t>(m) * height + y) * width + x]; }
  double at(int m, int y, int x) const { return data[(static_cast<std::size_t>(m) * height + y) * width + x]; }
  bool same_shape(const Tensor3& o) const { return maps == o.maps && height == o.height && width == o.width; }
};

enum class PoolMode : std::uint8_t { max = 0, average = 1 };

/// Stride-1 convolution with same-size zero padding. Weights are laid out
/// out_maps x in_maps x kernel_h x kernel_w; kernel sides must be odd.
struct ConvLayer {
  int out_maps = 0;
  int in_maps = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  double weight(int o, int i, int ky, int kx) const {
    return weights[((static_cast<std::size_t>(o) * in_maps + i) * kernel_h + ky) * kernel_w + kx];
  }
};

struct ReluLayer {};

/// 2x2 window, stride 2; odd trailing rows/columns form partial windows.
struct PoolLayer {
  PoolMode mode = PoolMode::max;
};

struct Layer {
  std::string name;
  std::variant<ConvLayer, ReluLayer, PoolLayer> op;

  bool is_conv() const { return std::holds_alternative<ConvLayer>(op); }
};

/// Activations of every layer for one input; index k holds the output of
/// layer k.
struct FeatureMapStack {
  std::vector<std::string> names;
  std::vector<Tensor3> activations;

  const Tensor3& at(const std::string& layer) const;
  bool contains(const std::string& layer) const;
  /// Map count N_l.
  int maps(const std::string& layer) const { return at(layer).maps; }
  /// Spatial size M_l = h_l * w_l.
  std::size_t spatial(const std::string& layer) const { return at(layer).spatial(); }
};

/// Fixed-weight feed-forward stack of convolution, rectifier and pooling
/// layers. Immutable once constructed.
class FeatureNetwork {
 public:
  FeatureNetwork(int input_channels, int input_height, int input_width, std::vector<Layer> layers);

  /// Seeded He-initialized network: conv1 (3->8, 3x3), relu1, pool1,
  /// conv2 (8->16, 3x3), relu2, pool2. Biases are zero.
  static FeatureNetwork builtin(std::uint64_t seed = 0, int input_width = 224, int input_height = 224,
                                PoolMode pool = PoolMode::max);

  int input_channels() const { return input_channels_; }
  int input_height() const { return input_height_; }
  int input_width() const { return input_width_; }
  const std::vector<Layer>& layers() const { return layers_; }
  int layer_index(const std::string& name) const;
  std::vector<std::string> conv_layer_names() const;

  FeatureMapStack forward(const Image& img) const;

  /// Reverse-mode pass: `output_grads[k]` is dLoss/d(activation of layer k)
  /// (empty tensors mean zero). Returns dLoss/d(input pixels). Rectifiers use
  /// subgradient 0 at exactly 0; max pooling routes to the first maximal
  /// element of each window.
  Image backward(const Image& input, const FeatureMapStack& stack,
                 std::vector<Tensor3> output_grads) const;

 private:
  int input_channels_;
  int input_height_;
  int input_width_;
  std::vector<Layer> layers_;
};

/// Network file: "PDNET1\0\0", u32 input channels/height/width, u32 layer
/// count, then per layer u8 kind (0 conv, 1 relu, 2 pool), u32-length name,
/// and for conv u32 out/in/kh/kw + f64 weights + f64 biases, for pool u8
/// mode. Little-endian.
std::string encode_network(const FeatureNetwork& net);
FeatureNetwork decode_network(std::string bytes, const std::string& source = "network");
void save_network(const FeatureNetwork& net, const std::filesystem::path& path);
FeatureNetwork load_network(const std::filesystem::path& path);

}  // namespace paintdomain
