#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "paintdomain/matrix_io.hpp"

namespace paintdomain {

struct LabeledDataset {
  FeatureMatrix features;
  std::vector<int> labels;
  std::vector<std::string> class_names;

  int class_count() const { return static_cast<int>(class_names.size()); }
  /// Row/label agreement, label range and finiteness; training additionally
  /// needs at least two classes.
  void validate(bool for_training) const;
  LabeledDataset subset(std::span<const std::size_t> indices) const;
};

/// Per-feature affine map to zero mean and unit (population) variance,
/// fitted on training rows. Constant features keep scale 1.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> inv_scale;

  static Standardizer fit(const FeatureMatrix& m);
  std::vector<double> apply(std::span<const double> row) const;
  FeatureMatrix apply(const FeatureMatrix& m) const;
};

/// Multinomial logistic regression with L2-penalized mean cross-entropy.
struct SoftmaxModel {
  std::vector<std::string> class_names;
  Standardizer standardizer;
  std::size_t dims = 0;
  /// class_count x dims, row-major.
  std::vector<double> weights;
  std::vector<double> bias;
  std::vector<double> loss_trajectory;

  /// Class probabilities.
  std::vector<double> scores(std::span<const double> features) const;
};

/// Full-batch gradient descent with backtracking from zero weights; the
/// recorded objective never increases. `seed` is accepted for interface
/// uniformity: the procedure itself is deterministic.
SoftmaxModel train_softmax(const LabeledDataset& ds, double l2 = 1e-3, int epochs = 200, std::uint64_t seed = 0);

/// Solution of min 1/2 a^T Q a - sum a,  Q_ij = y_i y_j K_ij,
/// 0 <= a_i <= C, y^T a = 0.
struct BinarySvmSolution {
  std::vector<double> alpha;
  /// Decision function f(x) = sum a_i y_i K(x_i, x) - rho.
  double rho = 0.0;
  /// Maximal KKT violation m(a) - M(a) at termination.
  double kkt_gap = 0.0;
  /// Dual objective in maximization form: sum a - 1/2 a^T Q a.
  double dual_objective = 0.0;
  int iterations = 0;
};

/// Sequential minimal optimization with second-order working-set selection.
/// `kernel` is the n x n Gram matrix (row-major), labels are +1/-1.
BinarySvmSolution solve_binary_svm(std::span<const double> kernel, std::span<const int> labels, double c_reg,
                                   double tolerance = 1e-3, int max_iterations = 1000000);

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

/// One-vs-rest RBF SVM over standardized features.
struct SvmModel {
  std::vector<std::string> class_names;
  Standardizer standardizer;
  double c_reg = 1.0;
  double gamma = 1.0;
  /// Standardized training rows referenced by support indices.
  FeatureMatrix store;
  struct Binary {
    std::vector<std::size_t> support;
    /// alpha_i * y_i for each support index.
    std::vector<double> coef;
    double rho = 0.0;
    double kkt_gap = 0.0;
    double dual_objective = 0.0;
  };
  std::vector<Binary> per_class;

  /// One-vs-rest decision values.
  std::vector<double> scores(std::span<const double> features) const;
};

SvmModel train_rbf_svm(const LabeledDataset& ds, double c_reg, double gamma, int threads = 1);

using Model = std::variant<SoftmaxModel, SvmModel>;

std::vector<double> predict_scores(const Model& model, std::span<const double> features);
/// K distinct class ids by descending score; equal scores order by class id.
std::vector<int> topk_from_scores(std::span<const double> scores, int k);
std::vector<int> predict_topk(const Model& model, std::span<const double> features, int k);
/// Score matrix (rows x classes) for every row of `features`.
FeatureMatrix predict_score_matrix(const Model& model, const FeatureMatrix& features, int threads = 1);
const std::vector<std::string>& model_class_names(const Model& model);

struct GridSearchSpec {
  std::vector<double> c_grid;
  std::vector<double> gamma_grid;
  int folds = 5;
  std::uint64_t seed = 0;

  /// C in 2^-5..2^15 and gamma in 2^-15..2^3, both in x4 steps.
  static GridSearchSpec defaults();
  void validate() const;
};

struct GridCell {
  double c_reg = 0.0;
  double gamma = 0.0;
  double cv_accuracy = 0.0;
};

struct GridSearchResult {
  double c_reg = 0.0;
  double gamma = 0.0;
  double cv_accuracy = 0.0;
  std::vector<GridCell> cells;
};

/// Stratified fold ids. Rows are first put in a canonical order (label, then
/// feature values) so that permuting the dataset yields the same partition.
std::vector<int> stratified_folds(const LabeledDataset& ds, int folds, std::uint64_t seed);

/// Stratified k-fold search; ties go to the smaller C, then smaller gamma.
/// A validation fold lacking a class triggers a refold with the next seed,
/// up to five attempts.
GridSearchResult grid_search(const LabeledDataset& ds, const GridSearchSpec& spec, int threads = 1);

/// Model file: "PDMODEL\0", u32 version (1), u8 kind (0 softmax, 1 svm),
/// class names, standardizer, then the kind-specific payload.
std::string encode_model(const Model& model);
Model decode_model(std::string bytes, const std::string& source = "model");
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace paintdomain
