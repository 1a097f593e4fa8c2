#include "paintdomain/neural_style.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "paintdomain/random.hpp"

namespace paintdomain {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void check_same_image_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) throw InvalidArgument(std::string(what) + ": image shape mismatch");
}

}  // namespace

StyleConfig StyleConfig::defaults_for(const FeatureNetwork& net) {
  StyleConfig c;
  c.style_layers = net.conv_layer_names();
  c.content_layer = c.style_layers.back();
  c.layer_weights.assign(c.style_layers.size(), 1.0 / static_cast<double>(c.style_layers.size()));
  return c;
}

void StyleConfig::validate() const {
  if (content_layer.empty()) throw InvalidArgument("style config: no content layer");
  if (style_layers.empty()) throw InvalidArgument("style config: no style layers");
  if (layer_weights.size() != style_layers.size()) {
    throw InvalidArgument("style config: one weight per style layer required");
  }
  if (std::ranges::any_of(layer_weights, [](double w) { return !(w >= 0.0); })) {
    throw InvalidArgument("style config: layer weights must be nonnegative");
  }
  if (!(std::accumulate(layer_weights.begin(), layer_weights.end(), 0.0) > 0.0)) {
    throw InvalidArgument("style config: layer weights must not all be zero");
  }
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw InvalidArgument("style config: alpha and beta must be nonnegative");
  if (!(step_size > 0.0)) throw InvalidArgument("style config: step size must be positive");
  if (iterations < 0) throw InvalidArgument("style config: negative iteration count");
  if (max_halvings < 0) throw InvalidArgument("style config: negative halving budget");
}

GramMatrix gram(const Tensor3& f) {
  const int n = f.maps;
  const std::size_t m = f.spatial();
  GramMatrix g{n, std::vector<double>(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0)};
  for (int i = 0; i < n; ++i) {
    const double* fi = f.data.data() + static_cast<std::size_t>(i) * m;
    for (int j = i; j < n; ++j) {
      const double* fj = f.data.data() + static_cast<std::size_t>(j) * m;
      double acc = 0.0;
      for (std::size_t k = 0; k < m; ++k) acc += fi[k] * fj[k];
      g.values[static_cast<std::size_t>(i) * n + j] = acc;
      g.values[static_cast<std::size_t>(j) * n + i] = acc;
    }
  }
  return g;
}

GramMatrix gram(const FeatureMapStack& stack, const std::string& layer) { return gram(stack.at(layer)); }

double content_loss(const FeatureMapStack& generated, const FeatureMapStack& content,
                    const std::string& layer) {
  const Tensor3& f = generated.at(layer);
  const Tensor3& p = content.at(layer);
  if (!f.same_shape(p)) throw InvalidArgument("content_loss: layer shape mismatch at " + layer);
  return 0.5 * squared_distance(f.data, p.data);
}

double style_layer_loss(const GramMatrix& g, const GramMatrix& a, int maps, std::size_t spatial) {
  if (g.side != a.side) throw InvalidArgument("style_layer_loss: Gram side mismatch");
  if (maps < 1 || spatial < 1) throw InvalidArgument("style_layer_loss: N_l and M_l must be positive");
  const double n = maps;
  const double m = static_cast<double>(spatial);
  return squared_distance(g.values, a.values) / (4.0 * n * n * m * m);
}

double style_loss(const FeatureMapStack& generated, const FeatureMapStack& reference,
                  const StyleConfig& config) {
  double acc = 0.0;
  for (std::size_t l = 0; l < config.style_layers.size(); ++l) {
    const std::string& name = config.style_layers[l];
    const Tensor3& f = generated.at(name);
    const Tensor3& r = reference.at(name);
    if (!f.same_shape(r)) throw InvalidArgument("style_loss: layer shape mismatch at " + name);
    acc += config.layer_weights[l] * style_layer_loss(gram(f), gram(r), f.maps, f.spatial());
  }
  return acc;
}

StyleTargets prepare_targets(const FeatureNetwork& net, const Image& subject, const Image& reference,
                             const StyleConfig& config) {
  config.validate();
  StyleTargets t;
  t.content = net.forward(subject);
  const FeatureMapStack r = net.forward(reference);
  if (!t.content.contains(config.content_layer)) {
    throw InvalidArgument("content layer '" + config.content_layer + "' not in network");
  }
  for (const std::string& name : config.style_layers) t.style_grams.push_back(gram(r, name));
  return t;
}

LossTerms evaluate_loss(const FeatureNetwork& net, const Image& generated, const StyleTargets& targets,
                        const StyleConfig& config) {
  const FeatureMapStack x = net.forward(generated);
  LossTerms terms;
  terms.content = content_loss(x, targets.content, config.content_layer);
  for (std::size_t l = 0; l < config.style_layers.size(); ++l) {
    const Tensor3& f = x.at(config.style_layers[l]);
    terms.style += config.layer_weights[l] * style_layer_loss(gram(f), targets.style_grams[l], f.maps, f.spatial());
  }
  terms.total = config.alpha * terms.content + config.beta * terms.style;
  return terms;
}

LossGradient evaluate_loss_gradient(const FeatureNetwork& net, const Image& generated,
                                    const StyleTargets& targets, const StyleConfig& config) {
  const FeatureMapStack x = net.forward(generated);
  std::vector<Tensor3> grads(x.activations.size());
  auto slot = [&](const std::string& name) -> Tensor3& {
    const auto k = static_cast<std::size_t>(net.layer_index(name));
    if (grads[k].data.empty()) {
      const Tensor3& a = x.activations[k];
      grads[k] = Tensor3(a.maps, a.height, a.width, 0.0);
    }
    return grads[k];
  };

  LossTerms terms;
  {
    const Tensor3& f = x.at(config.content_layer);
    const Tensor3& p = targets.content.at(config.content_layer);
    if (!f.same_shape(p)) throw InvalidArgument("content layer shape mismatch");
    terms.content = 0.5 * squared_distance(f.data, p.data);
    if (config.alpha != 0.0) {
      Tensor3& g = slot(config.content_layer);
      for (std::size_t i = 0; i < f.data.size(); ++i) g.data[i] += config.alpha * (f.data[i] - p.data[i]);
    }
  }
  for (std::size_t l = 0; l < config.style_layers.size(); ++l) {
    const std::string& name = config.style_layers[l];
    const Tensor3& f = x.at(name);
    const GramMatrix g = gram(f);
    const GramMatrix& a = targets.style_grams[l];
    const double e = style_layer_loss(g, a, f.maps, f.spatial());
    terms.style += config.layer_weights[l] * e;
    const double coef = config.beta * config.layer_weights[l];
    if (coef == 0.0) continue;
    // dE/dF = (G - A) F / (N^2 M^2)
    const double n = f.maps;
    const double m = static_cast<double>(f.spatial());
    const double scale = coef / (n * n * m * m);
    Tensor3& out = slot(name);
    const std::size_t ms = f.spatial();
    for (int i = 0; i < f.maps; ++i) {
      double* gi = out.data.data() + static_cast<std::size_t>(i) * ms;
      for (int j = 0; j < f.maps; ++j) {
        const double d = scale * (g.at(i, j) - a.at(i, j));
        if (d == 0.0) continue;
        const double* fj = f.data.data() + static_cast<std::size_t>(j) * ms;
        for (std::size_t k = 0; k < ms; ++k) gi[k] += d * fj[k];
      }
    }
  }
  terms.total = config.alpha * terms.content + config.beta * terms.style;
  return {terms, net.backward(generated, x, std::move(grads))};
}

double total_loss(const Image& generated, const Image& subject, const Image& reference,
                  const FeatureNetwork& net, const StyleConfig& config) {
  return evaluate_loss(net, generated, prepare_targets(net, subject, reference, config), config).total;
}

Image grad_total_loss(const Image& generated, const Image& subject, const Image& reference,
                      const FeatureNetwork& net, const StyleConfig& config) {
  return evaluate_loss_gradient(net, generated, prepare_targets(net, subject, reference, config), config)
      .gradient;
}

Image white_noise(int width, int height, int channels, std::uint64_t seed) {
  Rng rng(seed);
  Image img(width, height, channels);
  for (double& v : img.data()) v = std::clamp(0.5 + 0.1 * standard_normal(rng), 0.0, 1.0);
  return img;
}

NeuralTransferResult neural_style_transfer(const Image& subject, const Image& reference,
                                           const FeatureNetwork& net, const StyleConfig& config) {
  config.validate();
  check_same_image_shape(subject, reference, "neural_style_transfer");
  const StyleTargets targets = prepare_targets(net, subject, reference, config);

  NeuralTransferResult result;
  Image x = white_noise(net.input_width(), net.input_height(), net.input_channels(), config.init_seed);
  LossGradient cur = evaluate_loss_gradient(net, x, targets, config);
  auto check_finite = [&](double loss, int iteration) {
    if (std::isfinite(loss)) return;
    const double last = result.loss_trajectory.empty() ? NAN : result.loss_trajectory.back();
    std::ostringstream msg;
    msg << "loss became non-finite at iteration " << iteration << " (last finite loss " << last
        << "); reduce the step size";
    throw DivergenceError(msg.str(), last);
  };
  check_finite(cur.loss.total, 0);
  result.loss_trajectory.push_back(cur.loss.total);

  double step = config.step_size;
  for (int it = 1; it <= config.iterations; ++it) {
    bool accepted = false;
    bool trial_finite = true;
    for (int h = 0; h <= config.max_halvings; ++h) {
      Image trial = x;
      auto td = trial.data();
      auto gd = cur.gradient.data();
      for (std::size_t i = 0; i < td.size(); ++i) td[i] -= step * gd[i];
      const LossTerms t = evaluate_loss(net, trial, targets, config);
      trial_finite = std::isfinite(t.total);
      if (trial_finite && t.total <= cur.loss.total) {
        x = std::move(trial);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (accepted) {
      LossGradient next = evaluate_loss_gradient(net, x, targets, config);
      check_finite(next.loss.total, it);
      // Barzilai-Borwein trial step s.s / s.y for the next iteration, with
      // doubling as the fallback when the curvature estimate is unusable.
      double ss = 0.0, sy = 0.0;
      const auto gn = next.gradient.data();
      const auto go = cur.gradient.data();
      for (std::size_t i = 0; i < gn.size(); ++i) {
        const double si = -step * go[i];
        ss += si * si;
        sy += si * (gn[i] - go[i]);
      }
      const double bb = ss / sy;
      step = sy > 0.0 && std::isfinite(bb) ? bb : step * 2.0;
      cur = std::move(next);
    } else {
      check_finite(trial_finite ? cur.loss.total : NAN, it);
      step = config.step_size;
    }
    result.loss_trajectory.push_back(cur.loss.total);
  }
  result.image = clamp01(std::move(x));
  return result;
}

}  // namespace paintdomain
