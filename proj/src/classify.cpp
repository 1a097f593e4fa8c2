#include "paintdomain/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "paintdomain/binary_io.hpp"
#include "paintdomain/parallel.hpp"
#include "paintdomain/random.hpp"

namespace paintdomain {

namespace {

constexpr std::string_view kModelMagic{"PDMODEL\0", 8};
constexpr std::uint32_t kModelVersion = 1;
constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

struct SoftmaxObjective {
  const FeatureMatrix& x;
  const std::vector<int>& y;
  int classes;
  double l2;

  // Returns the objective; fills gradient when non-null. Parameters are the
  // weights followed by the biases.
  double operator()(const std::vector<double>& theta, std::vector<double>* grad) const {
    const std::size_t d = x.cols;
    const auto c = static_cast<std::size_t>(classes);
    const double* w = theta.data();
    const double* b = theta.data() + c * d;
    if (grad) grad->assign(theta.size(), 0.0);
    std::vector<double> z(c);
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
      auto row = x.row(i);
      double zmax = -kInf;
      for (std::size_t k = 0; k < c; ++k) {
        double acc = b[k];
        for (std::size_t j = 0; j < d; ++j) acc += w[k * d + j] * row[j];
        z[k] = acc;
        zmax = std::max(zmax, acc);
      }
      double sum = 0.0;
      for (std::size_t k = 0; k < c; ++k) sum += std::exp(z[k] - zmax);
      const double log_norm = zmax + std::log(sum);
      const auto yi = static_cast<std::size_t>(y[i]);
      loss += log_norm - z[yi];
      if (grad) {
        double* gw = grad->data();
        double* gb = grad->data() + c * d;
        for (std::size_t k = 0; k < c; ++k) {
          const double p = std::exp(z[k] - log_norm) - (k == yi ? 1.0 : 0.0);
          gb[k] += p;
          for (std::size_t j = 0; j < d; ++j) gw[k * d + j] += p * row[j];
        }
      }
    }
    const double n = static_cast<double>(x.rows);
    loss /= n;
    double reg = 0.0;
    for (std::size_t i = 0; i < c * d; ++i) reg += w[i] * w[i];
    loss += 0.5 * l2 * reg;
    if (grad) {
      for (double& g : *grad) g /= n;
      for (std::size_t i = 0; i < c * d; ++i) (*grad)[i] += l2 * w[i];
    }
    return loss;
  }
};

std::vector<double> kernel_matrix(const FeatureMatrix& x, double gamma) {
  const std::size_t n = x.rows;
  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    k[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = rbf_kernel(x.row(i), x.row(j), gamma);
      k[i * n + j] = v;
      k[j * n + i] = v;
    }
  }
  return k;
}

SvmModel::Binary train_one_vs_rest(const std::vector<double>& kernel, const std::vector<int>& labels, int cls,
                                   double c_reg) {
  std::vector<int> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == cls ? 1 : -1;
  const BinarySvmSolution sol = solve_binary_svm(kernel, y, c_reg);
  SvmModel::Binary b;
  for (std::size_t i = 0; i < sol.alpha.size(); ++i) {
    if (sol.alpha[i] > 0.0) {
      b.support.push_back(i);
      b.coef.push_back(sol.alpha[i] * y[i]);
    }
  }
  b.rho = sol.rho;
  b.kkt_gap = sol.kkt_gap;
  b.dual_objective = sol.dual_objective;
  return b;
}

bool lexicographic_less(std::span<const double> a, std::span<const double> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

void put_strings(ByteWriter& w, const std::vector<std::string>& v) {
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (const auto& s : v) w.str(s);
}

std::vector<std::string> get_strings(ByteReader& r) {
  const std::uint32_t n = r.u32();
  std::vector<std::string> v;
  for (std::uint32_t i = 0; i < n; ++i) v.push_back(r.str());
  return v;
}

void put_doubles(ByteWriter& w, const std::vector<double>& v) {
  w.u64(v.size());
  w.f64s(v);
}

std::vector<double> get_doubles(ByteReader& r) { return r.f64s(static_cast<std::size_t>(r.u64())); }

}  // namespace

void LabeledDataset::validate(bool for_training) const {
  if (features.rows != labels.size()) {
    throw InvalidArgument("dataset: " + std::to_string(features.rows) + " feature rows but " +
                          std::to_string(labels.size()) + " labels");
  }
  for (int l : labels) {
    if (l < 0 || l >= class_count()) throw InvalidArgument("dataset: label " + std::to_string(l) + " out of range");
  }
  if (!std::ranges::all_of(features.data, [](double v) { return std::isfinite(v); })) {
    throw InvalidArgument("dataset: non-finite feature values");
  }
  if (for_training) {
    if (class_count() < 2) throw InvalidArgument("dataset: training needs at least two classes");
    if (features.rows == 0) throw InvalidArgument("dataset: no training rows");
    const int first = labels.front();
    if (std::ranges::all_of(labels, [first](int l) { return l == first; })) {
      throw InvalidArgument("dataset: training rows cover a single class");
    }
  }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  LabeledDataset out;
  out.features = features.select_rows(indices);
  out.class_names = class_names;
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(labels[i]);
  return out;
}

Standardizer Standardizer::fit(const FeatureMatrix& m) {
  Standardizer s;
  s.mean.assign(m.cols, 0.0);
  s.inv_scale.assign(m.cols, 1.0);
  if (m.rows == 0) return s;
  for (std::size_t i = 0; i < m.rows; ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols; ++j) s.mean[j] += r[j];
  }
  for (double& v : s.mean) v /= static_cast<double>(m.rows);
  std::vector<double> var(m.cols, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols; ++j) {
      const double d = r[j] - s.mean[j];
      var[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < m.cols; ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(m.rows));
    s.inv_scale[j] = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
  return s;
}

std::vector<double> Standardizer::apply(std::span<const double> row) const {
  if (row.size() != mean.size()) {
    throw InvalidArgument("feature length " + std::to_string(row.size()) + " does not match model dimension " +
                          std::to_string(mean.size()));
  }
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - mean[j]) * inv_scale[j];
  return out;
}

FeatureMatrix Standardizer::apply(const FeatureMatrix& m) const {
  FeatureMatrix out(m.rows, m.cols, m.descriptor);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const auto r = apply(m.row(i));
    std::ranges::copy(r, out.row(i).begin());
  }
  return out;
}

std::vector<double> SoftmaxModel::scores(std::span<const double> features) const {
  const std::vector<double> x = standardizer.apply(features);
  const std::size_t c = class_names.size();
  std::vector<double> z(c);
  double zmax = -kInf;
  for (std::size_t k = 0; k < c; ++k) {
    double acc = bias[k];
    for (std::size_t j = 0; j < dims; ++j) acc += weights[k * dims + j] * x[j];
    z[k] = acc;
    zmax = std::max(zmax, acc);
  }
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return z;
}

SoftmaxModel train_softmax(const LabeledDataset& ds, double l2, int epochs, std::uint64_t /*seed*/) {
  ds.validate(true);
  if (!(l2 >= 0.0)) throw InvalidArgument("train_softmax: l2 must be nonnegative");
  if (epochs < 0) throw InvalidArgument("train_softmax: negative epoch count");
  SoftmaxModel model;
  model.class_names = ds.class_names;
  model.standardizer = Standardizer::fit(ds.features);
  model.dims = ds.features.cols;
  const FeatureMatrix x = model.standardizer.apply(ds.features);
  const auto c = static_cast<std::size_t>(ds.class_count());
  const SoftmaxObjective objective{x, ds.labels, ds.class_count(), l2};

  std::vector<double> theta(c * model.dims + c, 0.0);
  std::vector<double> grad;
  double loss = objective(theta, &grad);
  model.loss_trajectory.push_back(loss);
  double step = 1.0;
  for (int e = 0; e < epochs; ++e) {
    bool accepted = false;
    for (int h = 0; h <= 30; ++h) {
      std::vector<double> trial = theta;
      for (std::size_t i = 0; i < trial.size(); ++i) trial[i] -= step * grad[i];
      const double trial_loss = objective(trial, nullptr);
      if (trial_loss <= loss) {
        theta = std::move(trial);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (accepted) {
      loss = objective(theta, &grad);
      step *= 2.0;
    } else {
      step = 1.0;
    }
    model.loss_trajectory.push_back(loss);
  }
  model.weights.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(c * model.dims));
  model.bias.assign(theta.begin() + static_cast<std::ptrdiff_t>(c * model.dims), theta.end());
  return model;
}

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

BinarySvmSolution solve_binary_svm(std::span<const double> kernel, std::span<const int> labels, double c_reg,
                                   double tolerance, int max_iterations) {
  const std::size_t n = labels.size();
  if (kernel.size() != n * n) throw InvalidArgument("solve_binary_svm: kernel must be n x n");
  if (!(c_reg > 0.0)) throw InvalidArgument("solve_binary_svm: C must be positive");
  for (int y : labels) {
    if (y != 1 && y != -1) throw InvalidArgument("solve_binary_svm: labels must be +1 or -1");
  }
  BinarySvmSolution sol;
  sol.alpha.assign(n, 0.0);
  if (n == 0) return sol;
  if (std::ranges::all_of(labels, [&](int y) { return y == labels[0]; })) {
    // One-sided slice: the constraint y^T a = 0 forces a = 0 and the decision
    // function is the constant label.
    sol.rho = -labels[0];
    return sol;
  }

  auto q = [&](std::size_t i, std::size_t j) {
    return static_cast<double>(labels[i] * labels[j]) * kernel[i * n + j];
  };
  auto is_upper = [&](std::size_t t) { return sol.alpha[t] >= c_reg; };
  auto is_lower = [&](std::size_t t) { return sol.alpha[t] <= 0.0; };
  std::vector<double> grad(n, -1.0);

  double gap = kInf;
  int iter = 0;
  for (; iter < max_iterations; ++iter) {
    // Working set: maximal violating i, then j by second-order gain.
    double gmax = -kInf;
    double gmax2 = -kInf;
    std::ptrdiff_t i_sel = -1;
    std::ptrdiff_t j_sel = -1;
    for (std::size_t t = 0; t < n; ++t) {
      if (labels[t] == 1) {
        if (!is_upper(t) && -grad[t] >= gmax) {
          gmax = -grad[t];
          i_sel = static_cast<std::ptrdiff_t>(t);
        }
      } else if (!is_lower(t) && grad[t] >= gmax) {
        gmax = grad[t];
        i_sel = static_cast<std::ptrdiff_t>(t);
      }
    }
    double obj_diff_min = kInf;
    if (i_sel >= 0) {
      const auto i = static_cast<std::size_t>(i_sel);
      for (std::size_t t = 0; t < n; ++t) {
        if (labels[t] == 1) {
          if (is_lower(t)) continue;
          const double grad_diff = gmax + grad[t];
          gmax2 = std::max(gmax2, grad[t]);
          if (grad_diff > 0.0) {
            const double quad = kernel[i * n + i] + kernel[t * n + t] - 2.0 * labels[i] * q(i, t);
            const double obj = -(grad_diff * grad_diff) / (quad > 0.0 ? quad : kTau);
            if (obj <= obj_diff_min) {
              j_sel = static_cast<std::ptrdiff_t>(t);
              obj_diff_min = obj;
            }
          }
        } else {
          if (is_upper(t)) continue;
          const double grad_diff = gmax - grad[t];
          gmax2 = std::max(gmax2, -grad[t]);
          if (grad_diff > 0.0) {
            const double quad = kernel[i * n + i] + kernel[t * n + t] + 2.0 * labels[i] * q(i, t);
            const double obj = -(grad_diff * grad_diff) / (quad > 0.0 ? quad : kTau);
            if (obj <= obj_diff_min) {
              j_sel = static_cast<std::ptrdiff_t>(t);
              obj_diff_min = obj;
            }
          }
        }
      }
    }
    gap = gmax + gmax2;
    if (gap < tolerance || j_sel < 0) break;

    const auto i = static_cast<std::size_t>(i_sel);
    const auto j = static_cast<std::size_t>(j_sel);
    const double old_i = sol.alpha[i];
    const double old_j = sol.alpha[j];
    double& ai = sol.alpha[i];
    double& aj = sol.alpha[j];
    const double c = c_reg;
    if (labels[i] != labels[j]) {
      double quad = kernel[i * n + i] + kernel[j * n + j] + 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) {
          aj = 0.0;
          ai = diff;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = -diff;
      }
      if (diff > 0.0) {
        if (ai > c) {
          ai = c;
          aj = c - diff;
        }
      } else if (aj > c) {
        aj = c;
        ai = c + diff;
      }
    } else {
      double quad = kernel[i * n + i] + kernel[j * n + j] - 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > c) {
        if (ai > c) {
          ai = c;
          aj = sum - c;
        }
      } else if (aj < 0.0) {
        aj = 0.0;
        ai = sum;
      }
      if (sum > c) {
        if (aj > c) {
          aj = c;
          ai = sum - c;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = sum;
      }
    }
    const double di = ai - old_i;
    const double dj = aj - old_j;
    for (std::size_t t = 0; t < n; ++t) grad[t] += q(i, t) * di + q(j, t) * dj;
  }
  sol.iterations = iter;
  sol.kkt_gap = gap;

  double ub = kInf, lb = -kInf, sum_free = 0.0;
  int free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = labels[t] * grad[t];
    if (is_upper(t)) {
      if (labels[t] == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (is_lower(t)) {
      if (labels[t] == 1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free_count;
      sum_free += yg;
    }
  }
  sol.rho = free_count > 0 ? sum_free / free_count : (ub + lb) / 2.0;

  double obj = 0.0;
  for (std::size_t t = 0; t < n; ++t) obj += sol.alpha[t] * (grad[t] - 1.0);
  sol.dual_objective = -0.5 * obj;
  return sol;
}

std::vector<double> SvmModel::scores(std::span<const double> features) const {
  const std::vector<double> x = standardizer.apply(features);
  std::vector<double> kcache(store.rows, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> out;
  out.reserve(per_class.size());
  for (const Binary& b : per_class) {
    double f = -b.rho;
    for (std::size_t s = 0; s < b.support.size(); ++s) {
      const std::size_t idx = b.support[s];
      if (std::isnan(kcache[idx])) kcache[idx] = rbf_kernel(store.row(idx), x, gamma);
      f += b.coef[s] * kcache[idx];
    }
    out.push_back(f);
  }
  return out;
}

SvmModel train_rbf_svm(const LabeledDataset& ds, double c_reg, double gamma, int threads) {
  ds.validate(true);
  if (!(c_reg > 0.0) || !(gamma > 0.0)) throw InvalidArgument("train_rbf_svm: C and gamma must be positive");
  SvmModel model;
  model.class_names = ds.class_names;
  model.c_reg = c_reg;
  model.gamma = gamma;
  model.standardizer = Standardizer::fit(ds.features);
  model.store = model.standardizer.apply(ds.features);
  const std::vector<double> kernel = kernel_matrix(model.store, gamma);
  model.per_class.resize(static_cast<std::size_t>(ds.class_count()));
  parallel_for(model.per_class.size(), threads, [&](std::size_t c) {
    model.per_class[c] = train_one_vs_rest(kernel, ds.labels, static_cast<int>(c), c_reg);
  });
  return model;
}

std::vector<double> predict_scores(const Model& model, std::span<const double> features) {
  return std::visit([&](const auto& m) { return m.scores(features); }, model);
}

std::vector<int> topk_from_scores(std::span<const double> scores, int k) {
  const int c = static_cast<int>(scores.size());
  if (k < 1 || k > c) {
    throw InvalidArgument("top-k: K=" + std::to_string(k) + " outside [1, " + std::to_string(c) + "]");
  }
  std::vector<int> ids(static_cast<std::size_t>(c));
  std::iota(ids.begin(), ids.end(), 0);
  std::ranges::stable_sort(ids, [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  ids.resize(static_cast<std::size_t>(k));
  return ids;
}

std::vector<int> predict_topk(const Model& model, std::span<const double> features, int k) {
  return topk_from_scores(predict_scores(model, features), k);
}

FeatureMatrix predict_score_matrix(const Model& model, const FeatureMatrix& features, int threads) {
  const std::size_t c = model_class_names(model).size();
  FeatureMatrix out(features.rows, c);
  parallel_for(features.rows, threads, [&](std::size_t i) {
    const auto s = predict_scores(model, features.row(i));
    std::ranges::copy(s, out.row(i).begin());
  });
  return out;
}

const std::vector<std::string>& model_class_names(const Model& model) {
  return std::visit([](const auto& m) -> const std::vector<std::string>& { return m.class_names; }, model);
}

GridSearchSpec GridSearchSpec::defaults() {
  GridSearchSpec s;
  for (int e = -5; e <= 15; e += 2) s.c_grid.push_back(std::ldexp(1.0, e));
  for (int e = -15; e <= 3; e += 2) s.gamma_grid.push_back(std::ldexp(1.0, e));
  return s;
}

void GridSearchSpec::validate() const {
  if (c_grid.empty() || gamma_grid.empty()) throw InvalidArgument("grid search: empty parameter grid");
  if (folds < 2) throw InvalidArgument("grid search: at least 2 folds required");
  if (std::ranges::any_of(c_grid, [](double v) { return !(v > 0.0); }) ||
      std::ranges::any_of(gamma_grid, [](double v) { return !(v > 0.0); })) {
    throw InvalidArgument("grid search: grid values must be positive");
  }
}

std::vector<int> stratified_folds(const LabeledDataset& ds, int folds, std::uint64_t seed) {
  std::vector<std::size_t> order(ds.labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) {
    if (ds.labels[a] != ds.labels[b]) return ds.labels[a] < ds.labels[b];
    return lexicographic_less(ds.features.row(a), ds.features.row(b));
  });
  Rng rng(seed);
  std::vector<int> fold(ds.labels.size(), 0);
  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t end = start;
    while (end < order.size() && ds.labels[order[end]] == ds.labels[order[start]]) ++end;
    std::vector<std::size_t> members(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(end));
    shuffle(std::span(members), rng);
    for (std::size_t r = 0; r < members.size(); ++r) fold[members[r]] = static_cast<int>(r % static_cast<std::size_t>(folds));
    start = end;
  }
  return fold;
}

GridSearchResult grid_search(const LabeledDataset& ds, const GridSearchSpec& spec, int threads) {
  spec.validate();
  ds.validate(true);
  if (ds.features.rows < static_cast<std::size_t>(spec.folds)) {
    throw InvalidArgument("grid search: fewer rows than folds");
  }
  std::vector<bool> present(static_cast<std::size_t>(ds.class_count()), false);
  for (int l : ds.labels) present[static_cast<std::size_t>(l)] = true;

  std::vector<int> fold;
  bool ok = false;
  for (int attempt = 0; attempt < 5 && !ok; ++attempt) {
    fold = stratified_folds(ds, spec.folds, spec.seed + static_cast<std::uint64_t>(attempt));
    ok = true;
    for (int f = 0; f < spec.folds && ok; ++f) {
      std::vector<bool> seen(present.size(), false);
      for (std::size_t i = 0; i < fold.size(); ++i)
        if (fold[i] == f) seen[static_cast<std::size_t>(ds.labels[i])] = true;
      for (std::size_t c = 0; c < present.size(); ++c)
        if (present[c] && !seen[c]) ok = false;
    }
  }
  if (!ok) throw InvalidArgument("grid search: a fold misses a class after 5 refolding attempts");

  // Canonical row order so the result does not depend on input row order.
  std::vector<std::size_t> order(ds.labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) {
    if (ds.labels[a] != ds.labels[b]) return ds.labels[a] < ds.labels[b];
    return lexicographic_less(ds.features.row(a), ds.features.row(b));
  });

  GridSearchResult result;
  for (double c : spec.c_grid)
    for (double g : spec.gamma_grid) result.cells.push_back({c, g, 0.0});

  parallel_for(result.cells.size(), threads, [&](std::size_t cell_index) {
    GridCell& cell = result.cells[cell_index];
    std::size_t correct = 0;
    for (int f = 0; f < spec.folds; ++f) {
      std::vector<std::size_t> train, test;
      for (std::size_t idx : order) (fold[idx] == f ? test : train).push_back(idx);
      const LabeledDataset tr = ds.subset(train);
      const Model model = train_rbf_svm(tr, cell.c_reg, cell.gamma, 1);
      for (std::size_t idx : test) {
        if (predict_topk(model, ds.features.row(idx), 1).front() == ds.labels[idx]) ++correct;
      }
    }
    cell.cv_accuracy = static_cast<double>(correct) / static_cast<double>(ds.labels.size());
  });

  std::vector<GridCell> ranked = result.cells;
  std::ranges::stable_sort(ranked, [](const GridCell& a, const GridCell& b) {
    if (a.c_reg != b.c_reg) return a.c_reg < b.c_reg;
    return a.gamma < b.gamma;
  });
  const GridCell* best = &ranked.front();
  for (const GridCell& c : ranked)
    if (c.cv_accuracy > best->cv_accuracy) best = &c;
  result.c_reg = best->c_reg;
  result.gamma = best->gamma;
  result.cv_accuracy = best->cv_accuracy;
  return result;
}

std::string encode_model(const Model& model) {
  ByteWriter w;
  w.bytes(kModelMagic);
  w.u32(kModelVersion);
  std::visit(Overloaded{
                 [&](const SoftmaxModel& m) {
                   w.u8(0);
                   put_strings(w, m.class_names);
                   put_doubles(w, m.standardizer.mean);
                   put_doubles(w, m.standardizer.inv_scale);
                   w.u64(m.dims);
                   put_doubles(w, m.weights);
                   put_doubles(w, m.bias);
                 },
                 [&](const SvmModel& m) {
                   w.u8(1);
                   put_strings(w, m.class_names);
                   put_doubles(w, m.standardizer.mean);
                   put_doubles(w, m.standardizer.inv_scale);
                   w.f64(m.c_reg);
                   w.f64(m.gamma);
                   w.u64(m.store.rows);
                   w.u64(m.store.cols);
                   w.f64s(m.store.data);
                   w.u32(static_cast<std::uint32_t>(m.per_class.size()));
                   for (const auto& b : m.per_class) {
                     w.u64(b.support.size());
                     for (std::size_t s : b.support) w.u64(s);
                     w.f64s(b.coef);
                     w.f64(b.rho);
                     w.f64(b.kkt_gap);
                     w.f64(b.dual_objective);
                   }
                 },
             },
             model);
  return w.buffer();
}

Model decode_model(std::string bytes, const std::string& source) {
  ByteReader r(std::move(bytes), source);
  r.expect_magic(kModelMagic);
  const std::uint32_t version = r.u32();
  if (version != kModelVersion) throw IoError(source + ": unsupported model version " + std::to_string(version));
  const std::uint8_t kind = r.u8();
  auto names = get_strings(r);
  Standardizer st;
  st.mean = get_doubles(r);
  st.inv_scale = get_doubles(r);
  if (st.mean.size() != st.inv_scale.size()) throw IoError(source + ": malformed standardizer");
  if (kind == 0) {
    SoftmaxModel m;
    m.class_names = std::move(names);
    m.standardizer = std::move(st);
    m.dims = static_cast<std::size_t>(r.u64());
    m.weights = get_doubles(r);
    m.bias = get_doubles(r);
    if (m.dims != m.standardizer.mean.size() || m.weights.size() != m.class_names.size() * m.dims ||
        m.bias.size() != m.class_names.size()) {
      throw IoError(source + ": inconsistent softmax dimensions");
    }
    if (!r.at_end()) throw IoError(source + ": trailing bytes");
    return m;
  }
  if (kind != 1) throw IoError(source + ": unknown model kind " + std::to_string(kind));
  SvmModel m;
  m.class_names = std::move(names);
  m.standardizer = std::move(st);
  m.c_reg = r.f64();
  m.gamma = r.f64();
  const auto rows = static_cast<std::size_t>(r.u64());
  const auto cols = static_cast<std::size_t>(r.u64());
  if (cols != m.standardizer.mean.size()) throw IoError(source + ": inconsistent SVM dimensions");
  if (cols != 0 && rows > r.remaining() / 8 / cols) throw IoError(source + ": unexpected end of data");
  m.store.rows = rows;
  m.store.cols = cols;
  m.store.data = r.f64s(rows * cols);
  const std::uint32_t classes = r.u32();
  if (classes != m.class_names.size()) throw IoError(source + ": class count mismatch");
  for (std::uint32_t c = 0; c < classes; ++c) {
    SvmModel::Binary b;
    const auto ns = static_cast<std::size_t>(r.u64());
    if (ns > rows) throw IoError(source + ": support count exceeds store");
    for (std::size_t s = 0; s < ns; ++s) {
      const auto idx = static_cast<std::size_t>(r.u64());
      if (idx >= rows) throw IoError(source + ": support index out of range");
      b.support.push_back(idx);
    }
    b.coef = r.f64s(ns);
    b.rho = r.f64();
    b.kkt_gap = r.f64();
    b.dual_objective = r.f64();
    m.per_class.push_back(std::move(b));
  }
  if (!r.at_end()) throw IoError(source + ": trailing bytes");
  return m;
}

void save_model(const Model& model, const std::filesystem::path& path) { write_file_atomic(path, encode_model(model)); }

Model load_model(const std::filesystem::path& path) { return decode_model(read_file(path), path.string()); }

}  // namespace paintdomain
