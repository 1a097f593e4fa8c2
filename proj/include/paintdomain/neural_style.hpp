#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "paintdomain/feature_network.hpp"
#include "paintdomain/image.hpp"

namespace paintdomain {

/// Square Gram matrix G = F F^T of one layer's vectorized maps.
struct GramMatrix {
  int side = 0;
  std::vector<double> values;

  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * side + j]; }
};

struct StyleConfig {
  std::string content_layer;
  std::vector<std::string> style_layers;
  /// w_l, one per style layer.
  std::vector<double> layer_weights;
  double alpha = 1.0;
  double beta = 1000.0;
  double step_size = 1.0;
  int iterations = 100;
  std::uint64_t init_seed = 0;
  /// Backtracking budget per iteration.
  int max_halvings = 20;

  /// content = deepest convolution, style = every convolution with uniform
  /// weights.
  static StyleConfig defaults_for(const FeatureNetwork& net);
  void validate() const;
};

/// Thrown when the objective turns non-finite during descent.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double last_finite_loss)
      : std::runtime_error(what), last_finite_loss(last_finite_loss) {}
  double last_finite_loss;
};

GramMatrix gram(const Tensor3& features);
GramMatrix gram(const FeatureMapStack& stack, const std::string& layer);

/// 1/2 sum (F - P)^2 at `layer`.
double content_loss(const FeatureMapStack& generated, const FeatureMapStack& content,
                    const std::string& layer);

/// E_l = sum (G - A)^2 / (4 N_l^2 M_l^2).
double style_layer_loss(const GramMatrix& generated, const GramMatrix& reference, int maps,
                        std::size_t spatial);

/// sum_l w_l E_l over config.style_layers.
double style_loss(const FeatureMapStack& generated, const FeatureMapStack& reference,
                  const StyleConfig& config);

/// Content stack of S and style Grams of R, computed once per transfer.
struct StyleTargets {
  FeatureMapStack content;
  std::vector<GramMatrix> style_grams;
};

StyleTargets prepare_targets(const FeatureNetwork& net, const Image& subject, const Image& reference,
                             const StyleConfig& config);

struct LossTerms {
  double content = 0.0;
  double style = 0.0;
  double total = 0.0;
};

LossTerms evaluate_loss(const FeatureNetwork& net, const Image& generated, const StyleTargets& targets,
                        const StyleConfig& config);

struct LossGradient {
  LossTerms loss;
  Image gradient;
};

/// Loss and its exact derivative with respect to the generated pixels.
LossGradient evaluate_loss_gradient(const FeatureNetwork& net, const Image& generated,
                                    const StyleTargets& targets, const StyleConfig& config);

/// alpha * L_content(S, X) + beta * L_style(R, X).
double total_loss(const Image& generated, const Image& subject, const Image& reference,
                  const FeatureNetwork& net, const StyleConfig& config);

Image grad_total_loss(const Image& generated, const Image& subject, const Image& reference,
                      const FeatureNetwork& net, const StyleConfig& config);

/// Seeded N(0.5, 0.1^2) noise clamped to [0,1].
Image white_noise(int width, int height, int channels, std::uint64_t seed);

struct NeuralTransferResult {
  Image image;
  /// Total loss before the first step and after every iteration.
  std::vector<double> loss_trajectory;
};

/// Gradient descent on pixels from white noise. Each iteration tries a
/// Barzilai-Borwein step and halves it while the loss does not decrease; a
/// rejected step leaves the image unchanged, so the trajectory never increases.
NeuralTransferResult neural_style_transfer(const Image& subject, const Image& reference,
                                           const FeatureNetwork& net, const StyleConfig& config);

}  // namespace paintdomain
