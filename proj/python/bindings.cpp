#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "paintdomain/augment.hpp"
#include "paintdomain/classify.hpp"
#include "paintdomain/cli.hpp"
#include "paintdomain/descriptors.hpp"
#include "paintdomain/experiments.hpp"
#include "paintdomain/feature_network.hpp"
#include "paintdomain/laplacian_style.hpp"
#include "paintdomain/neural_style.hpp"
#include "paintdomain/pyramid.hpp"

namespace py = pybind11;
namespace pd = paintdomain;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<int, py::array::c_style | py::array::forcecast>;

// H x W or H x W x C arrays map to channel-planar images.
pd::Image to_image(const Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw pd::InvalidArgument("expected an H x W or H x W x C array");
  const auto h = static_cast<int>(a.shape(0));
  const auto w = static_cast<int>(a.shape(1));
  const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
  pd::Image img(w, h, c);
  const double* src = a.data();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int k = 0; k < c; ++k) img.at(k, y, x) = src[(static_cast<std::size_t>(y) * w + x) * c + k];
  return img;
}

Array from_image(const pd::Image& img) {
  const int h = img.height(), w = img.width(), c = img.channels();
  Array out = c == 1 ? Array({h, w}) : Array({h, w, c});
  double* dst = out.mutable_data();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int k = 0; k < c; ++k) dst[(static_cast<std::size_t>(y) * w + x) * c + k] = img.at(k, y, x);
  return out;
}

Array from_vector(const std::vector<double>& v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

pd::FeatureMatrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw pd::InvalidArgument("expected a 2-D array");
  pd::FeatureMatrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data.begin());
  return m;
}

Array from_matrix(const pd::FeatureMatrix& m) {
  Array out({static_cast<py::ssize_t>(m.rows), static_cast<py::ssize_t>(m.cols)});
  std::copy(m.data.begin(), m.data.end(), out.mutable_data());
  return out;
}

std::vector<int> to_ints(const IntArray& a) { return {a.data(), a.data() + a.size()}; }

pd::LabeledDataset to_dataset(const Array& x, const IntArray& y, std::vector<std::string> names) {
  pd::LabeledDataset ds;
  ds.features = to_matrix(x);
  ds.labels = to_ints(y);
  if (names.empty()) {
    int top = -1;
    for (int l : ds.labels) top = std::max(top, l);
    for (int i = 0; i <= top; ++i) names.push_back(std::to_string(i));
  }
  ds.class_names = std::move(names);
  return ds;
}

struct PyModel {
  pd::Model model;
};

}  // namespace

PYBIND11_MODULE(_paintdomain, m) {
  m.doc() = "Style transfer, descriptors, classifiers and experiment metrics for painting-domain studies";
  py::register_exception<pd::IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<pd::DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

  m.def(
      "build_laplacian_pyramid",
      [](const Array& img, int levels) {
        const auto p = pd::build_laplacian_pyramid(to_image(img), levels);
        py::list bands;
        for (const auto& b : p.bands) bands.append(from_image(b));
        return py::make_tuple(bands, from_image(p.residual));
      },
      py::arg("image"), py::arg("levels") = 7, "Returns (bands finest first, residual).");
  m.def(
      "reconstruct",
      [](const std::vector<Array>& bands, const Array& residual) {
        pd::LaplacianPyramid p;
        for (const auto& b : bands) p.bands.push_back(to_image(b));
        p.residual = to_image(residual);
        return from_image(pd::reconstruct(p));
      },
      py::arg("bands"), py::arg("residual"));
  m.def("max_pyramid_levels", &pd::max_pyramid_levels, py::arg("width"), py::arg("height"));

  m.def(
      "laplacian_style_transfer",
      [](const Array& subject, const Array& reference, int levels, int iterations, int bins,
         const std::string& color_mode, bool clamp) {
        pd::TransferParams p;
        p.levels = levels;
        p.iterations = iterations;
        p.bins = bins;
        if (color_mode == "per_channel") p.color_mode = pd::ColorMode::per_channel;
        else if (color_mode == "luminance") p.color_mode = pd::ColorMode::luminance;
        else throw pd::InvalidArgument("color_mode must be 'per_channel' or 'luminance'");
        p.clamp_output = clamp;
        const pd::Image s = to_image(subject), r = to_image(reference);
        pd::Image out;
        {
          py::gil_scoped_release release;
          out = pd::laplacian_style_transfer(s, r, p);
        }
        return from_image(out);
      },
      py::arg("subject"), py::arg("reference"), py::arg("levels") = 7, py::arg("iterations") = 10,
      py::arg("bins") = 256, py::arg("color_mode") = "per_channel", py::arg("clamp") = true);

  m.def(
      "neural_style_transfer",
      [](const Array& subject, const Array& reference, int iterations, double alpha, double beta, double step,
         std::uint64_t seed) {
        const pd::Image s = to_image(subject), r = to_image(reference);
        const pd::FeatureNetwork net = pd::FeatureNetwork::builtin(seed, s.width(), s.height());
        pd::StyleConfig cfg = pd::StyleConfig::defaults_for(net);
        cfg.iterations = iterations;
        cfg.alpha = alpha;
        cfg.beta = beta;
        cfg.step_size = step;
        cfg.init_seed = seed;
        pd::NeuralTransferResult res;
        {
          py::gil_scoped_release release;
          res = pd::neural_style_transfer(s, r, net, cfg);
        }
        return py::make_tuple(from_image(res.image), res.loss_trajectory);
      },
      py::arg("subject"), py::arg("reference"), py::arg("iterations") = 100, py::arg("alpha") = 1.0,
      py::arg("beta") = 1000.0, py::arg("step") = 1.0, py::arg("seed") = 0,
      "Built-in network sized to the subject; both images must be H x W x 3 of equal shape. "
      "Returns (image, loss trajectory).");

  m.def(
      "phog", [](const Array& img) { return from_vector(pd::phog(to_image(img)).values); }, py::arg("image"));
  m.def(
      "plbp", [](const Array& img) { return from_vector(pd::plbp(to_image(img)).values); }, py::arg("image"));

  m.def(
      "hflip", [](const Array& img) { return from_image(pd::hflip(to_image(img))); }, py::arg("image"));
  m.def(
      "rotate", [](const Array& img, double degrees) { return from_image(pd::rotate(to_image(img), degrees)); },
      py::arg("image"), py::arg("degrees"));

  py::class_<PyModel>(m, "Model")
      .def_property_readonly("class_names", [](const PyModel& pm) { return pd::model_class_names(pm.model); })
      .def_property_readonly("kind",
                             [](const PyModel& pm) { return pm.model.index() == 0 ? "softmax" : "svm"; })
      .def(
          "scores", [](const PyModel& pm, const Array& x) { return from_matrix(pd::predict_score_matrix(pm.model, to_matrix(x))); },
          py::arg("features"), "Per-class scores for each row.")
      .def(
          "topk",
          [](const PyModel& pm, const Array& x, int k) {
            const auto scores = pd::predict_score_matrix(pm.model, to_matrix(x));
            std::vector<std::vector<int>> out;
            for (std::size_t i = 0; i < scores.rows; ++i) out.push_back(pd::topk_from_scores(scores.row(i), k));
            return out;
          },
          py::arg("features"), py::arg("k"))
      .def("save", [](const PyModel& pm, const std::filesystem::path& p) { pd::save_model(pm.model, p); })
      .def_static("load", [](const std::filesystem::path& p) { return PyModel{pd::load_model(p)}; });

  m.def(
      "train_softmax",
      [](const Array& x, const IntArray& y, std::vector<std::string> names, double l2, int epochs) {
        return PyModel{pd::train_softmax(to_dataset(x, y, std::move(names)), l2, epochs)};
      },
      py::arg("features"), py::arg("labels"), py::arg("class_names") = std::vector<std::string>{},
      py::arg("l2") = 1e-3, py::arg("epochs") = 200);
  m.def(
      "train_rbf_svm",
      [](const Array& x, const IntArray& y, std::vector<std::string> names, double c, double gamma) {
        return PyModel{pd::train_rbf_svm(to_dataset(x, y, std::move(names)), c, gamma)};
      },
      py::arg("features"), py::arg("labels"), py::arg("class_names") = std::vector<std::string>{},
      py::arg("c") = 1.0, py::arg("gamma") = 1.0);

  m.def(
      "topk_from_scores", [](const std::vector<double>& s, int k) { return pd::topk_from_scores(s, k); },
      py::arg("scores"), py::arg("k"));
  m.def(
      "topk_accuracy",
      [](const Array& scores, const IntArray& labels, int k) {
        const auto l = to_ints(labels);
        return pd::topk_accuracy(to_matrix(scores), l, k);
      },
      py::arg("scores"), py::arg("labels"), py::arg("k"));
  m.def(
      "confusion_matrix",
      [](const IntArray& pred, const IntArray& labels, int classes) {
        const auto p = to_ints(pred), l = to_ints(labels);
        const auto cm = pd::confusion_matrix(p, l, classes);
        py::array_t<std::int64_t> out({classes, classes});
        std::copy(cm.counts.begin(), cm.counts.end(), out.mutable_data());
        return out;
      },
      py::arg("predictions"), py::arg("labels"), py::arg("classes"));
  m.def(
      "stochastic_stats",
      [](const std::vector<double>& values) {
        const auto s = pd::stochastic_stats(values);
        return py::make_tuple(s.mean, s.stddev ? py::object(py::float_(*s.stddev)) : py::object(py::none()));
      },
      py::arg("values"), "Returns (mean, sample std or None).");
  m.def("added_image_ratio", &pd::added_image_ratio, py::arg("added"), py::arg("paintings_in_train"));

  m.def(
      "run_experiment",
      [](const std::filesystem::path& config, int threads, std::uint64_t seed) {
        const auto cfg = pd::ProtocolConfig::from_json_file(config, seed);
        pd::ProtocolReport report;
        {
          py::gil_scoped_release release;
          report = pd::run_protocol(cfg, threads);
        }
        return py::make_tuple(pd::render_protocol_table(report), pd::protocol_report_json(report));
      },
      py::arg("config"), py::arg("threads") = 1, py::arg("seed") = 0, "Returns (table text, JSON text).");

  m.def(
      "cli", [](const std::vector<std::string>& args) { return pd::dispatch(args); }, py::arg("args"),
      "Runs a command-line invocation in-process and returns its exit code.");
}
