#include <cmath>

#include "doctest.h"
#include "gradcheck.hpp"
#include "paintdomain/feature_network.hpp"
#include "paintdomain/neural_style.hpp"
#include "support.hpp"

using namespace paintdomain;
using testsupport::random_image;

namespace {

FeatureNetwork single_conv(std::vector<double> weights, int in, int out, int k, PoolMode pool) {
  ConvLayer conv;
  conv.in_maps = in;
  conv.out_maps = out;
  conv.kernel_h = k;
  conv.kernel_w = k;
  conv.weights = std::move(weights);
  conv.bias.assign(static_cast<std::size_t>(out), 0.0);
  std::vector<Layer> layers{{"conv", conv}, {"relu", ReluLayer{}}, {"pool", PoolLayer{pool}}};
  return FeatureNetwork(in, 5, 5, std::move(layers));
}

// Smallest eigenvalue bound via Cholesky with a shift: A + s I is PD for
// every s > -lambda_min.
bool is_psd(const GramMatrix& g, double tol) {
  const int n = g.side;
  std::vector<double> a = g.values;
  for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i * n + i)] += tol;
  for (int j = 0; j < n; ++j) {
    double d = a[static_cast<std::size_t>(j * n + j)];
    for (int k = 0; k < j; ++k) d -= a[static_cast<std::size_t>(j * n + k)] * a[static_cast<std::size_t>(j * n + k)];
    if (d <= 0.0) return false;
    const double l = std::sqrt(d);
    a[static_cast<std::size_t>(j * n + j)] = l;
    for (int i = j + 1; i < n; ++i) {
      double s = a[static_cast<std::size_t>(i * n + j)];
      for (int k = 0; k < j; ++k) s -= a[static_cast<std::size_t>(i * n + k)] * a[static_cast<std::size_t>(j * n + k)];
      a[static_cast<std::size_t>(i * n + j)] = s / l;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("built-in network shapes follow the pooling schedule") {
  const auto net = FeatureNetwork::builtin(0, 17, 12);
  Rng rng(1);
  const auto stack = net.forward(random_image(rng, 17, 12, 3));
  CHECK(stack.maps("conv1") == 8);
  CHECK(stack.at("conv1").width == 17);
  CHECK(stack.at("pool1").width == 9);
  CHECK(stack.at("pool1").height == 6);
  CHECK(stack.maps("conv2") == 16);
  CHECK(stack.at("pool2").width == 5);
  CHECK(stack.at("pool2").height == 3);
  CHECK(net.conv_layer_names() == std::vector<std::string>{"conv1", "conv2"});
  CHECK_THROWS_AS(net.forward(random_image(rng, 16, 12, 3)), InvalidArgument);
}

TEST_CASE("identity convolution and pooling modes") {
  // 1x1 identity kernel: conv output equals input.
  const auto maxnet = single_conv({1.0}, 1, 1, 1, PoolMode::max);
  const auto avgnet = single_conv({1.0}, 1, 1, 1, PoolMode::average);
  Image img(5, 5, 1);
  for (int i = 0; i < 25; ++i) img.data()[static_cast<std::size_t>(i)] = i;
  const auto s = maxnet.forward(img);
  CHECK(s.at("conv").data == std::vector<double>(img.data().begin(), img.data().end()));
  const auto& p = s.at("pool");
  CHECK(p.width == 3);
  CHECK(p.at(0, 0, 0) == 6.0);
  CHECK(p.at(0, 2, 2) == 24.0);
  CHECK(p.at(0, 0, 2) == 9.0);
  const auto avg_stack = avgnet.forward(img);
  const auto& a = avg_stack.at("pool");
  CHECK(a.at(0, 0, 0) == doctest::Approx(3.0));
  CHECK(a.at(0, 2, 2) == doctest::Approx(24.0));
  CHECK(a.at(0, 0, 2) == doctest::Approx(6.5));
}

TEST_CASE("network construction rejects broken chains") {
  ConvLayer c;
  c.in_maps = 2;
  c.out_maps = 1;
  c.kernel_h = c.kernel_w = 3;
  c.weights.assign(18, 0.1);
  c.bias.assign(1, 0.0);
  CHECK_THROWS_AS(FeatureNetwork(3, 8, 8, {{"c", c}}), InvalidArgument);
  c.in_maps = 3;
  CHECK_THROWS_AS(FeatureNetwork(3, 8, 8, {{"c", c}}), InvalidArgument);
  c.weights.assign(27, 0.1);
  CHECK_NOTHROW(FeatureNetwork(3, 8, 8, {{"c", c}}));
  c.kernel_h = 2;
  c.weights.assign(18, 0.1);
  CHECK_THROWS_AS(FeatureNetwork(3, 8, 8, {{"c", c}}), InvalidArgument);
  CHECK_THROWS_AS(FeatureNetwork(3, 8, 8, {{"r", ReluLayer{}}}), InvalidArgument);
}

TEST_CASE("network file round trip") {
  const auto net = FeatureNetwork::builtin(4, 10, 10, PoolMode::average);
  const auto back = decode_network(encode_network(net));
  Rng rng(2);
  const Image x = random_image(rng, 10, 10, 3);
  CHECK(back.forward(x).at("pool2").data == net.forward(x).at("pool2").data);
  CHECK_THROWS_AS(decode_network(encode_network(net).substr(0, 30)), IoError);
}

TEST_CASE("Gram matrices are symmetric and positive semidefinite") {
  Rng rng(3);
  const auto net = FeatureNetwork::builtin(1, 16, 16);
  for (int t = 0; t < 5; ++t) {
    const auto stack = net.forward(random_image(rng, 16, 16, 3));
    for (const auto& layer : {"conv1", "relu1", "conv2"}) {
      const GramMatrix g = gram(stack, layer);
      double trace = 0.0;
      for (int i = 0; i < g.side; ++i) {
        trace += g.at(i, i);
        for (int j = 0; j < g.side; ++j) CHECK(std::abs(g.at(i, j) - g.at(j, i)) <= 1e-9);
      }
      CHECK(is_psd(g, 1e-8 * trace + 1e-300));
    }
  }
}

TEST_CASE("loss identities") {
  Rng rng(4);
  const auto net = FeatureNetwork::builtin(2, 12, 12);
  const Image x = random_image(rng, 12, 12, 3);
  const auto stack = net.forward(x);
  const StyleConfig cfg = StyleConfig::defaults_for(net);
  CHECK(content_loss(stack, stack, "conv2") == 0.0);
  CHECK(style_loss(stack, stack, cfg) == 0.0);
  CHECK(style_layer_loss(GramMatrix{1, {2.0}}, GramMatrix{1, {0.0}}, 1, 1) == doctest::Approx(1.0));
  const Image y = random_image(rng, 12, 12, 3);
  CHECK(content_loss(net.forward(y), stack, "conv2") > 0.0);
}

TEST_CASE("content loss equals half the squared feature difference") {
  Tensor3 a(2, 1, 2), b(2, 1, 2);
  a.data = {1, 2, 3, 4};
  b.data = {0, 2, 1, 4};
  FeatureMapStack sa{{"f"}, {a}}, sb{{"f"}, {b}};
  CHECK(content_loss(sa, sb, "f") == doctest::Approx(0.5 * (1 + 4)));
  const GramMatrix g = gram(a);
  CHECK(g.at(0, 0) == 5.0);
  CHECK(g.at(0, 1) == 11.0);
  CHECK(g.at(1, 1) == 25.0);
}

TEST_CASE("analytic gradient matches central differences") {
  Rng rng(5);
  const auto net = FeatureNetwork::builtin(6, 12, 12);
  const Image s = random_image(rng, 12, 12, 3), r = random_image(rng, 12, 12, 3);
  const StyleConfig cfg = StyleConfig::defaults_for(net);
  const auto targets = prepare_targets(net, s, r, cfg);
  const Image x = white_noise(12, 12, 3, 9);
  const auto res = testsupport::gradient_check(net, x, targets, cfg, 30, 1e-4, 7);
  CHECK(res.checked == 30);
  CHECK(res.worst_relative <= 1e-4);
}

TEST_CASE("gradient through average pooling matches differences") {
  Rng rng(6);
  const auto net = FeatureNetwork::builtin(6, 9, 7, PoolMode::average);
  const Image s = random_image(rng, 9, 7, 3), r = random_image(rng, 9, 7, 3);
  StyleConfig cfg = StyleConfig::defaults_for(net);
  cfg.content_layer = "pool2";
  const auto targets = prepare_targets(net, s, r, cfg);
  const auto res = testsupport::gradient_check(net, white_noise(9, 7, 3, 1), targets, cfg, 20, 1e-4, 3);
  CHECK(res.checked == 20);
  CHECK(res.worst_relative <= 1e-4);
}

TEST_CASE("total_loss wrappers agree with the cached evaluation") {
  Rng rng(7);
  const auto net = FeatureNetwork::builtin(0, 8, 8);
  const Image s = random_image(rng, 8, 8, 3), r = random_image(rng, 8, 8, 3), x = random_image(rng, 8, 8, 3);
  const StyleConfig cfg = StyleConfig::defaults_for(net);
  const auto targets = prepare_targets(net, s, r, cfg);
  const auto lg = evaluate_loss_gradient(net, x, targets, cfg);
  CHECK(total_loss(x, s, r, net, cfg) == doctest::Approx(lg.loss.total));
  CHECK(max_abs_difference(grad_total_loss(x, s, r, net, cfg), lg.gradient) <= 1e-12);
  CHECK(lg.loss.total == doctest::Approx(cfg.alpha * lg.loss.content + cfg.beta * lg.loss.style));
}

TEST_CASE("white noise is seeded and clamped") {
  const Image a = white_noise(20, 20, 3, 5);
  CHECK(a == white_noise(20, 20, 3, 5));
  CHECK_FALSE(a == white_noise(20, 20, 3, 6));
  double mean = 0.0;
  for (double v : a.data()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    mean += v;
  }
  CHECK(mean / static_cast<double>(a.size()) == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("optimizer never increases the loss") {
  Rng rng(8);
  const auto net = FeatureNetwork::builtin(0, 12, 12);
  const Image s = random_image(rng, 12, 12, 3), r = random_image(rng, 12, 12, 3);
  StyleConfig cfg = StyleConfig::defaults_for(net);
  cfg.iterations = 30;
  const auto res = neural_style_transfer(s, r, net, cfg);
  REQUIRE(res.loss_trajectory.size() == 31);
  for (std::size_t i = 1; i < res.loss_trajectory.size(); ++i)
    CHECK(res.loss_trajectory[i] <= res.loss_trajectory[i - 1]);
  CHECK(res.loss_trajectory.back() < res.loss_trajectory.front());
  CHECK(res.image.same_shape(s));
  CHECK(neural_style_transfer(s, r, net, cfg).image == res.image);
}

TEST_CASE("style configuration validation") {
  const auto net = FeatureNetwork::builtin(0, 8, 8);
  StyleConfig cfg = StyleConfig::defaults_for(net);
  CHECK(cfg.content_layer == "conv2");
  CHECK(cfg.layer_weights == std::vector<double>{0.5, 0.5});
  cfg.layer_weights = {0.0, 0.0};
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = StyleConfig::defaults_for(net);
  cfg.style_layers = {"nope", "conv1"};
  Rng rng(1);
  const Image x = random_image(rng, 8, 8, 3);
  CHECK_THROWS(prepare_targets(net, x, x, cfg));
  cfg = StyleConfig::defaults_for(net);
  CHECK_THROWS_AS(neural_style_transfer(x, random_image(rng, 9, 8, 3), net, cfg), InvalidArgument);
}
