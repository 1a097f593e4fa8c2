#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "doctest.h"
#include "paintdomain/classify.hpp"
#include "support.hpp"
#include "svm_oracle.hpp"

using namespace paintdomain;

namespace {

LabeledDataset blobs(Rng& rng, int per_class, int classes, int dims, double spread) {
  LabeledDataset ds;
  ds.features = FeatureMatrix(0, static_cast<std::size_t>(dims));
  for (int c = 0; c < classes; ++c) ds.class_names.push_back("c" + std::to_string(c));
  for (int i = 0; i < per_class * classes; ++i) {
    const int c = i % classes;
    std::vector<double> row(static_cast<std::size_t>(dims));
    for (int d = 0; d < dims; ++d) row[static_cast<std::size_t>(d)] = (d % classes == c ? 3.0 : 0.0) + spread * (uniform01(rng) - 0.5);
    ds.features.append_row(row);
    ds.labels.push_back(c);
  }
  return ds;
}

LabeledDataset xor_data() {
  LabeledDataset ds;
  ds.class_names = {"neg", "pos"};
  ds.features = FeatureMatrix(0, 2);
  const double pts[4][2] = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
  for (int i = 0; i < 4; ++i) {
    ds.features.append_row(pts[i]);
    ds.labels.push_back(i < 2 ? 0 : 1);
  }
  return ds;
}

std::vector<double> rbf_matrix(const std::vector<std::vector<double>>& x, double gamma) {
  const std::size_t n = x.size();
  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) k[i * n + j] = rbf_kernel(x[i], x[j], gamma);
  return k;
}

}  // namespace

TEST_CASE("softmax separates well-spaced blobs") {
  Rng rng(1);
  const auto ds = blobs(rng, 20, 3, 6, 1.0);
  const auto model = train_softmax(ds, 1e-3, 100);
  int correct = 0;
  for (std::size_t i = 0; i < ds.features.rows; ++i)
    correct += topk_from_scores(model.scores(ds.features.row(i)), 1)[0] == ds.labels[i];
  CHECK(correct == 60);
  for (std::size_t e = 1; e < model.loss_trajectory.size(); ++e)
    CHECK(model.loss_trajectory[e] <= model.loss_trajectory[e - 1]);
  const auto p = model.scores(ds.features.row(0));
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0));
}

TEST_CASE("softmax is invariant to duplicating every row") {
  Rng rng(2);
  const auto ds = blobs(rng, 10, 2, 4, 4.0);
  std::vector<std::size_t> twice;
  for (std::size_t i = 0; i < ds.features.rows; ++i) twice.insert(twice.end(), {i, i});
  const auto a = train_softmax(ds, 1e-2, 50);
  const auto b = train_softmax(ds.subset(twice), 1e-2, 50);
  for (std::size_t i = 0; i < ds.features.rows; ++i) {
    const auto pa = a.scores(ds.features.row(i)), pb = b.scores(ds.features.row(i));
    for (std::size_t c = 0; c < pa.size(); ++c) CHECK(pa[c] == doctest::Approx(pb[c]).epsilon(1e-9));
  }
}

TEST_CASE("softmax edge cases") {
  Rng rng(3);
  auto ds = blobs(rng, 5, 3, 3, 1.0);
  const auto zero = train_softmax(ds, 1e-3, 0);
  for (double v : zero.scores(ds.features.row(0))) CHECK(v == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(train_softmax(ds, -1.0, 5), InvalidArgument);
  std::vector<std::size_t> only_first;
  for (std::size_t i = 0; i < ds.labels.size(); ++i)
    if (ds.labels[i] == 0) only_first.push_back(i);
  CHECK_THROWS_AS(train_softmax(ds.subset(only_first), 1e-3, 5), InvalidArgument);
  ds.labels[0] = 7;
  CHECK_THROWS_AS(train_softmax(ds, 1e-3, 5), InvalidArgument);
}

TEST_CASE("RBF SVM solves XOR") {
  const auto ds = xor_data();
  const auto model = train_rbf_svm(ds, 10.0, 1.0);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(topk_from_scores(model.scores(ds.features.row(i)), 1)[0] == ds.labels[i]);
}

TEST_CASE("property: SMO dual matches the exhaustive QP oracle") {
  Rng rng(4);
  for (int t = 0; t < 12; ++t) {
    const int n = testsupport::random_int(rng, 6, 8);
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (int i = 0; i < n; ++i) {
      x.push_back({uniform01(rng) * 2.0, uniform01(rng) * 2.0});
      y.push_back(i % 2 ? 1 : -1);
    }
    const double c = t % 3 == 0 ? 0.5 : 5.0;
    const auto k = rbf_matrix(x, 1.0);
    const auto sol = solve_binary_svm(k, y, c, 1e-6);
    CHECK(sol.dual_objective == doctest::Approx(testsupport::qp_oracle_dual(k, y, c)).epsilon(1e-3));
    CHECK(sol.kkt_gap <= 1e-3);
    double eq = 0.0;
    for (int i = 0; i < n; ++i) {
      CHECK(sol.alpha[static_cast<std::size_t>(i)] >= 0.0);
      CHECK(sol.alpha[static_cast<std::size_t>(i)] <= c);
      eq += y[static_cast<std::size_t>(i)] * sol.alpha[static_cast<std::size_t>(i)];
    }
    CHECK(std::abs(eq) <= 1e-9);
  }
}

TEST_CASE("single-label slice gives a constant decision sign") {
  const std::vector<double> k{1.0, 0.5, 0.5, 1.0};
  const auto pos = solve_binary_svm(k, std::vector<int>{1, 1}, 1.0);
  CHECK(pos.alpha == std::vector<double>{0.0, 0.0});
  CHECK(-pos.rho > 0.0);
  const auto neg = solve_binary_svm(k, std::vector<int>{-1, -1}, 1.0);
  CHECK(-neg.rho < 0.0);
  CHECK_THROWS_AS(solve_binary_svm(k, std::vector<int>{1, 0}, 1.0), InvalidArgument);
  CHECK_THROWS_AS(solve_binary_svm(k, std::vector<int>{1, -1}, 0.0), InvalidArgument);
}

TEST_CASE("property: RBF kernel matrices are positive semidefinite") {
  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    std::vector<std::vector<double>> x;
    for (int i = 0; i < 7; ++i) x.push_back({uniform01(rng), uniform01(rng), uniform01(rng)});
    const auto k = rbf_matrix(x, 0.5 + uniform01(rng) * 4.0);
    for (int s = 0; s < 20; ++s) {
      std::vector<double> v(7);
      for (double& e : v) e = uniform01(rng) - 0.5;
      double quad = 0.0;
      for (std::size_t i = 0; i < 7; ++i)
        for (std::size_t j = 0; j < 7; ++j) quad += v[i] * v[j] * k[i * 7 + j];
      CHECK(quad >= -1e-12);
    }
  }
  CHECK(rbf_kernel(std::vector<double>{0, 0}, std::vector<double>{1, 1}, 0.5) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("grid search picks the only cell of a one-point grid") {
  Rng rng(6);
  const auto ds = blobs(rng, 10, 2, 3, 1.0);
  GridSearchSpec spec;
  spec.c_grid = {2.0};
  spec.gamma_grid = {0.25};
  spec.folds = 3;
  const auto r = grid_search(ds, spec);
  CHECK(r.c_reg == 2.0);
  CHECK(r.gamma == 0.25);
  CHECK(r.cells.size() == 1);
}

TEST_CASE("grid search on separable data") {
  Rng rng(7);
  const auto ds = blobs(rng, 15, 3, 4, 1.0);
  GridSearchSpec spec;
  spec.c_grid = {0.5, 8.0};
  spec.gamma_grid = {0.0625, 0.5};
  spec.folds = 5;
  const auto r = grid_search(ds, spec, 2);
  CHECK(r.cv_accuracy >= 0.95);
  CHECK(r.cells.size() == 4);
  // Permuting the rows leaves the partition and the result unchanged.
  std::vector<std::size_t> perm(ds.features.rows);
  std::iota(perm.begin(), perm.end(), 0);
  Rng shuffle_rng(9);
  shuffle(std::span<std::size_t>(perm), shuffle_rng);
  const auto p = grid_search(ds.subset(perm), spec, 1);
  CHECK(p.c_reg == r.c_reg);
  CHECK(p.gamma == r.gamma);
  CHECK(p.cv_accuracy == r.cv_accuracy);
  for (std::size_t i = 0; i < r.cells.size(); ++i) CHECK(p.cells[i].cv_accuracy == r.cells[i].cv_accuracy);
}

TEST_CASE("stratified folds balance every class") {
  Rng rng(8);
  const auto ds = blobs(rng, 10, 2, 2, 1.0);
  const auto folds = stratified_folds(ds, 5, 3);
  std::vector<std::vector<int>> count(5, std::vector<int>(2, 0));
  for (std::size_t i = 0; i < folds.size(); ++i) ++count[static_cast<std::size_t>(folds[i])][static_cast<std::size_t>(ds.labels[i])];
  for (const auto& f : count) CHECK(f == std::vector<int>{2, 2});
}

TEST_CASE("grid defaults and validation") {
  const auto d = GridSearchSpec::defaults();
  CHECK(d.c_grid.front() == std::ldexp(1.0, -5));
  CHECK(d.c_grid.back() == std::ldexp(1.0, 15));
  CHECK(d.c_grid.size() == 11);
  CHECK(d.gamma_grid.front() == std::ldexp(1.0, -15));
  CHECK(d.gamma_grid.back() == std::ldexp(1.0, 3));
  CHECK(d.gamma_grid.size() == 10);
  GridSearchSpec bad = d;
  bad.folds = 1;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = d;
  bad.c_grid = {};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("top-k ordering") {
  const std::vector<double> s{0.1, 0.7, 0.2};
  CHECK(topk_from_scores(s, 2) == std::vector<int>{1, 2});
  CHECK(topk_from_scores(s, 3) == std::vector<int>{1, 2, 0});
  CHECK(topk_from_scores(std::vector<double>{0.5, 0.5, 0.1}, 2) == std::vector<int>{0, 1});
  CHECK_THROWS_AS(topk_from_scores(s, 4), InvalidArgument);
  CHECK_THROWS_AS(topk_from_scores(s, 0), InvalidArgument);
  Rng rng(10);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> v(6);
    for (double& e : v) e = uniform01(rng);
    const auto k3 = topk_from_scores(v, 3), k5 = topk_from_scores(v, 5);
    CHECK(std::equal(k3.begin(), k3.end(), k5.begin()));
  }
}

TEST_CASE("model files round trip both kinds") {
  Rng rng(11);
  const auto ds = blobs(rng, 8, 3, 5, 1.0);
  const Model soft = train_softmax(ds, 1e-3, 20);
  const Model svm = train_rbf_svm(ds, 4.0, 0.2, 2);
  for (const Model& m : {soft, svm}) {
    const Model back = decode_model(encode_model(m));
    CHECK(back.index() == m.index());
    CHECK(model_class_names(back) == ds.class_names);
    for (std::size_t i = 0; i < ds.features.rows; ++i)
      CHECK(predict_scores(back, ds.features.row(i)) == predict_scores(m, ds.features.row(i)));
    const std::string bytes = encode_model(m);
    CHECK_THROWS_AS(decode_model(bytes.substr(0, bytes.size() - 1)), IoError);
  }
  const auto matrix = predict_score_matrix(svm, ds.features, 3);
  CHECK(matrix.rows == ds.features.rows);
  CHECK(matrix.cols == 3);
  CHECK_THROWS_AS(predict_scores(soft, std::vector<double>{1.0}), InvalidArgument);
}

TEST_CASE("standardizer centers and scales") {
  FeatureMatrix m(0, 2);
  m.append_row(std::vector<double>{1.0, 5.0});
  m.append_row(std::vector<double>{3.0, 5.0});
  const auto st = Standardizer::fit(m);
  const auto z = st.apply(m);
  CHECK(z.row(0)[0] == doctest::Approx(-1.0));
  CHECK(z.row(1)[0] == doctest::Approx(1.0));
  CHECK(z.row(0)[1] == 0.0);
}
