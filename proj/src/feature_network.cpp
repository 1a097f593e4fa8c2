#include "paintdomain/feature_network.hpp"

#include <algorithm>
#include <cmath>

#include "paintdomain/binary_io.hpp"
#include "paintdomain/random.hpp"

namespace paintdomain {

namespace {

constexpr std::string_view kNetMagic{"PDNET1\0\0", 8};

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Tensor3 image_to_tensor(const Image& img) {
  Tensor3 t(img.channels(), img.height(), img.width());
  std::ranges::copy(img.data(), t.data.begin());
  return t;
}

Tensor3 conv_forward(const ConvLayer& L, const Tensor3& in) {
  Tensor3 out(L.out_maps, in.height, in.width);
  const int ph = L.kernel_h / 2;
  const int pw = L.kernel_w / 2;
  for (int o = 0; o < L.out_maps; ++o) {
    for (int y = 0; y < in.height; ++y) {
      for (int x = 0; x < in.width; ++x) {
        double acc = L.bias[static_cast<std::size_t>(o)];
        for (int i = 0; i < L.in_maps; ++i) {
          for (int ky = 0; ky < L.kernel_h; ++ky) {
            const int sy = y + ky - ph;
            if (sy < 0 || sy >= in.height) continue;
            for (int kx = 0; kx < L.kernel_w; ++kx) {
              const int sx = x + kx - pw;
              if (sx < 0 || sx >= in.width) continue;
              acc += L.weight(o, i, ky, kx) * in.at(i, sy, sx);
            }
          }
        }
        out.at(o, y, x) = acc;
      }
    }
  }
  return out;
}

Tensor3 conv_backward(const ConvLayer& L, const Tensor3& in, const Tensor3& grad_out) {
  Tensor3 grad_in(in.maps, in.height, in.width);
  const int ph = L.kernel_h / 2;
  const int pw = L.kernel_w / 2;
  for (int o = 0; o < L.out_maps; ++o) {
    for (int y = 0; y < in.height; ++y) {
      for (int x = 0; x < in.width; ++x) {
        const double g = grad_out.at(o, y, x);
        if (g == 0.0) continue;
        for (int i = 0; i < L.in_maps; ++i) {
          for (int ky = 0; ky < L.kernel_h; ++ky) {
            const int sy = y + ky - ph;
            if (sy < 0 || sy >= in.height) continue;
            for (int kx = 0; kx < L.kernel_w; ++kx) {
              const int sx = x + kx - pw;
              if (sx < 0 || sx >= in.width) continue;
              grad_in.at(i, sy, sx) += L.weight(o, i, ky, kx) * g;
            }
          }
        }
      }
    }
  }
  return grad_in;
}

Tensor3 pool_forward(PoolMode mode, const Tensor3& in) {
  Tensor3 out(in.maps, (in.height + 1) / 2, (in.width + 1) / 2);
  for (int m = 0; m < in.maps; ++m) {
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) {
        const int y1 = std::min(2 * y + 2, in.height);
        const int x1 = std::min(2 * x + 2, in.width);
        double best = -INFINITY;
        double sum = 0.0;
        for (int sy = 2 * y; sy < y1; ++sy) {
          for (int sx = 2 * x; sx < x1; ++sx) {
            best = std::max(best, in.at(m, sy, sx));
            sum += in.at(m, sy, sx);
          }
        }
        out.at(m, y, x) = mode == PoolMode::max ? best : sum / ((y1 - 2 * y) * (x1 - 2 * x));
      }
    }
  }
  return out;
}

Tensor3 pool_backward(PoolMode mode, const Tensor3& in, const Tensor3& grad_out) {
  Tensor3 grad_in(in.maps, in.height, in.width);
  for (int m = 0; m < in.maps; ++m) {
    for (int y = 0; y < grad_out.height; ++y) {
      for (int x = 0; x < grad_out.width; ++x) {
        const int y1 = std::min(2 * y + 2, in.height);
        const int x1 = std::min(2 * x + 2, in.width);
        const double g = grad_out.at(m, y, x);
        if (mode == PoolMode::average) {
          const double share = g / ((y1 - 2 * y) * (x1 - 2 * x));
          for (int sy = 2 * y; sy < y1; ++sy)
            for (int sx = 2 * x; sx < x1; ++sx) grad_in.at(m, sy, sx) += share;
          continue;
        }
        int by = 2 * y, bx = 2 * x;
        for (int sy = 2 * y; sy < y1; ++sy) {
          for (int sx = 2 * x; sx < x1; ++sx) {
            if (in.at(m, sy, sx) > in.at(m, by, bx)) {
              by = sy;
              bx = sx;
            }
          }
        }
        grad_in.at(m, by, bx) += g;
      }
    }
  }
  return grad_in;
}

}  // namespace

const Tensor3& FeatureMapStack::at(const std::string& layer) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == layer) return activations[i];
  }
  throw InvalidArgument("layer '" + layer + "' not present in feature stack");
}

bool FeatureMapStack::contains(const std::string& layer) const {
  return std::ranges::find(names, layer) != names.end();
}

FeatureNetwork::FeatureNetwork(int input_channels, int input_height, int input_width,
                               std::vector<Layer> layers)
    : input_channels_(input_channels),
      input_height_(input_height),
      input_width_(input_width),
      layers_(std::move(layers)) {
  if (input_channels < 1 || input_height < 1 || input_width < 1) {
    throw InvalidArgument("feature network: input dimensions must be positive");
  }
  int maps = input_channels;
  bool any_conv = false;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const Layer& l = layers_[k];
    if (l.name.empty()) throw InvalidArgument("feature network: layer " + std::to_string(k) + " has no name");
    for (std::size_t j = 0; j < k; ++j) {
      if (layers_[j].name == l.name) throw InvalidArgument("feature network: duplicate layer name " + l.name);
    }
    if (const auto* c = std::get_if<ConvLayer>(&l.op)) {
      if (c->in_maps != maps) {
        throw InvalidArgument("feature network: layer " + l.name + " expects " + std::to_string(c->in_maps) +
                              " input maps but receives " + std::to_string(maps));
      }
      if (c->out_maps < 1 || c->kernel_h < 1 || c->kernel_w < 1 || c->kernel_h % 2 == 0 ||
          c->kernel_w % 2 == 0) {
        throw InvalidArgument("feature network: layer " + l.name + " needs odd positive kernel sides");
      }
      const std::size_t expect = static_cast<std::size_t>(c->out_maps) * static_cast<std::size_t>(c->in_maps) *
                                 static_cast<std::size_t>(c->kernel_h) * static_cast<std::size_t>(c->kernel_w);
      if (c->weights.size() != expect || c->bias.size() != static_cast<std::size_t>(c->out_maps)) {
        throw InvalidArgument("feature network: layer " + l.name + " has malformed weights");
      }
      if (!std::ranges::all_of(c->weights, [](double v) { return std::isfinite(v); }) ||
          !std::ranges::all_of(c->bias, [](double v) { return std::isfinite(v); })) {
        throw InvalidArgument("feature network: layer " + l.name + " has non-finite weights");
      }
      maps = c->out_maps;
      any_conv = true;
    }
  }
  if (!any_conv) throw InvalidArgument("feature network: at least one convolution layer required");
}

FeatureNetwork FeatureNetwork::builtin(std::uint64_t seed, int input_width, int input_height, PoolMode pool) {
  Rng rng(seed);
  auto conv = [&](int in, int out) {
    ConvLayer c{out, in, 3, 3, {}, {}};
    const double sigma = std::sqrt(2.0 / (in * 9));
    c.weights.resize(static_cast<std::size_t>(out * in * 9));
    for (double& w : c.weights) w = sigma * standard_normal(rng);
    c.bias.assign(static_cast<std::size_t>(out), 0.0);
    return c;
  };
  std::vector<Layer> layers;
  layers.push_back({"conv1", conv(3, 8)});
  layers.push_back({"relu1", ReluLayer{}});
  layers.push_back({"pool1", PoolLayer{pool}});
  layers.push_back({"conv2", conv(8, 16)});
  layers.push_back({"relu2", ReluLayer{}});
  layers.push_back({"pool2", PoolLayer{pool}});
  return FeatureNetwork(3, input_height, input_width, std::move(layers));
}

int FeatureNetwork::layer_index(const std::string& name) const {
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    if (layers_[k].name == name) return static_cast<int>(k);
  }
  throw InvalidArgument("feature network has no layer named '" + name + "'");
}

std::vector<std::string> FeatureNetwork::conv_layer_names() const {
  std::vector<std::string> out;
  for (const Layer& l : layers_)
    if (l.is_conv()) out.push_back(l.name);
  return out;
}

FeatureMapStack FeatureNetwork::forward(const Image& img) const {
  if (img.width() != input_width_ || img.height() != input_height_ || img.channels() != input_channels_) {
    throw InvalidArgument("feature network expects " + std::to_string(input_width_) + "x" +
                          std::to_string(input_height_) + "x" + std::to_string(input_channels_) +
                          " input, got " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                          "x" + std::to_string(img.channels()));
  }
  FeatureMapStack stack;
  Tensor3 cur = image_to_tensor(img);
  for (const Layer& l : layers_) {
    cur = std::visit(Overloaded{
                         [&](const ConvLayer& c) { return conv_forward(c, cur); },
                         [&](const ReluLayer&) {
                           Tensor3 t = cur;
                           for (double& v : t.data) v = std::max(v, 0.0);
                           return t;
                         },
                         [&](const PoolLayer& p) { return pool_forward(p.mode, cur); },
                     },
                     l.op);
    stack.names.push_back(l.name);
    stack.activations.push_back(cur);
  }
  return stack;
}

Image FeatureNetwork::backward(const Image& input, const FeatureMapStack& stack,
                               std::vector<Tensor3> output_grads) const {
  if (stack.activations.size() != layers_.size() || output_grads.size() != layers_.size()) {
    throw InvalidArgument("backward: stack/gradient layer count mismatch");
  }
  const Tensor3 input_t = image_to_tensor(input);
  int top = -1;
  for (std::size_t k = 0; k < output_grads.size(); ++k) {
    if (!output_grads[k].data.empty()) {
      if (!output_grads[k].same_shape(stack.activations[k])) {
        throw InvalidArgument("backward: gradient shape mismatch at layer " + layers_[k].name);
      }
      top = static_cast<int>(k);
    }
  }
  if (top < 0) return Image(input.width(), input.height(), input.channels(), 0.0);

  Tensor3 grad = std::move(output_grads[static_cast<std::size_t>(top)]);
  for (int k = top; k >= 0; --k) {
    const auto ku = static_cast<std::size_t>(k);
    const Tensor3& in = k > 0 ? stack.activations[ku - 1] : input_t;
    grad = std::visit(Overloaded{
                          [&](const ConvLayer& c) { return conv_backward(c, in, grad); },
                          [&](const ReluLayer&) {
                            Tensor3 g = grad;
                            for (std::size_t i = 0; i < g.data.size(); ++i)
                              if (!(in.data[i] > 0.0)) g.data[i] = 0.0;
                            return g;
                          },
                          [&](const PoolLayer& p) { return pool_backward(p.mode, in, grad); },
                      },
                      layers_[ku].op);
    if (k > 0 && !output_grads[ku - 1].data.empty()) {
      const Tensor3& extra = output_grads[ku - 1];
      for (std::size_t i = 0; i < grad.data.size(); ++i) grad.data[i] += extra.data[i];
    }
  }
  return Image(input.width(), input.height(), input.channels(), std::move(grad.data));
}

std::string encode_network(const FeatureNetwork& net) {
  ByteWriter w;
  w.bytes(kNetMagic);
  w.u32(static_cast<std::uint32_t>(net.input_channels()));
  w.u32(static_cast<std::uint32_t>(net.input_height()));
  w.u32(static_cast<std::uint32_t>(net.input_width()));
  w.u32(static_cast<std::uint32_t>(net.layers().size()));
  for (const Layer& l : net.layers()) {
    std::visit(Overloaded{
                   [&](const ConvLayer& c) {
                     w.u8(0);
                     w.str(l.name);
                     w.u32(static_cast<std::uint32_t>(c.out_maps));
                     w.u32(static_cast<std::uint32_t>(c.in_maps));
                     w.u32(static_cast<std::uint32_t>(c.kernel_h));
                     w.u32(static_cast<std::uint32_t>(c.kernel_w));
                     w.f64s(c.weights);
                     w.f64s(c.bias);
                   },
                   [&](const ReluLayer&) {
                     w.u8(1);
                     w.str(l.name);
                   },
                   [&](const PoolLayer& p) {
                     w.u8(2);
                     w.str(l.name);
                     w.u8(static_cast<std::uint8_t>(p.mode));
                   },
               },
               l.op);
  }
  return w.buffer();
}

FeatureNetwork decode_network(std::string bytes, const std::string& source) {
  ByteReader r(std::move(bytes), source);
  r.expect_magic(kNetMagic);
  const auto ch = static_cast<int>(r.u32());
  const auto h = static_cast<int>(r.u32());
  const auto w = static_cast<int>(r.u32());
  const std::uint32_t count = r.u32();
  std::vector<Layer> layers;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint8_t kind = r.u8();
    Layer l;
    l.name = r.str();
    switch (kind) {
      case 0: {
        ConvLayer c;
        c.out_maps = static_cast<int>(r.u32());
        c.in_maps = static_cast<int>(r.u32());
        c.kernel_h = static_cast<int>(r.u32());
        c.kernel_w = static_cast<int>(r.u32());
        const std::uint64_t n = static_cast<std::uint64_t>(c.out_maps) * static_cast<std::uint64_t>(c.in_maps) *
                                static_cast<std::uint64_t>(c.kernel_h) * static_cast<std::uint64_t>(c.kernel_w);
        c.weights = r.f64s(static_cast<std::size_t>(n));
        c.bias = r.f64s(static_cast<std::size_t>(c.out_maps));
        l.op = std::move(c);
        break;
      }
      case 1:
        l.op = ReluLayer{};
        break;
      case 2: {
        const std::uint8_t mode = r.u8();
        if (mode > 1) throw IoError(source + ": unknown pooling mode");
        l.op = PoolLayer{static_cast<PoolMode>(mode)};
        break;
      }
      default:
        throw IoError(source + ": unknown layer kind " + std::to_string(kind));
    }
    layers.push_back(std::move(l));
  }
  if (!r.at_end()) throw IoError(source + ": trailing bytes after layer table");
  try {
    return FeatureNetwork(ch, h, w, std::move(layers));
  } catch (const InvalidArgument& e) {
    throw IoError(source + ": " + e.what());
  }
}

void save_network(const FeatureNetwork& net, const std::filesystem::path& path) {
  write_file_atomic(path, encode_network(net));
}

FeatureNetwork load_network(const std::filesystem::path& path) {
  return decode_network(read_file(path), path.string());
}

}  // namespace paintdomain
