#include "paintdomain/cli.hpp"

#include <cstdio>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "paintdomain/augment.hpp"
#include "paintdomain/binary_io.hpp"
#include "paintdomain/classify.hpp"
#include "paintdomain/descriptors.hpp"
#include "paintdomain/experiments.hpp"
#include "paintdomain/feature_network.hpp"
#include "paintdomain/image_io.hpp"
#include "paintdomain/laplacian_style.hpp"
#include "paintdomain/manifest.hpp"
#include "paintdomain/matrix_io.hpp"
#include "paintdomain/neural_style.hpp"
#include "paintdomain/parallel.hpp"
#include "paintdomain/pyramid.hpp"

namespace paintdomain {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 0;
  int threads = default_thread_count();
  bool verbose = false;
};

void log(const Globals& g, const std::string& msg) {
  if (g.verbose) std::cerr << msg << '\n';
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& s, const std::string& flag) {
  std::vector<double> out;
  for (const auto& tok : split_list(s)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError(flag + ": '" + tok + "' is not a number");
    }
  }
  if (out.empty()) throw UsageError(flag + ": empty list");
  return out;
}

std::vector<int> parse_ints(const std::string& s, const std::string& flag) {
  std::vector<int> out;
  for (double v : parse_doubles(s, flag)) {
    if (v != static_cast<int>(v)) throw UsageError(flag + ": expected integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

std::optional<std::pair<int, int>> parse_size(const std::string& s, const std::string& flag) {
  if (s.empty()) return std::nullopt;
  int w = 0, h = 0;
  char x = 0, extra = 0;
  if (std::sscanf(s.c_str(), "%d%c%d%c", &w, &x, &h, &extra) != 3 || (x != 'x' && x != 'X') || w < 1 || h < 1)
    throw UsageError(flag + ": expected WIDTHxHEIGHT");
  return std::pair{w, h};
}

template <typename T>
T usage_guard(const std::function<T()>& fn) {
  try {
    return fn();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

LabeledDataset load_dataset(const std::string& features, const std::string& labels, const std::string& split) {
  LabeledDataset ds;
  const FeatureMatrix m = load_feature_matrix(features);
  const LabelFile lf = load_labels(labels);
  if (lf.rows.size() != m.rows)
    throw IoError(labels + ": " + std::to_string(lf.rows.size()) + " labels for " + std::to_string(m.rows) + " rows");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < lf.rows.size(); ++i)
    if (split == "all" || lf.rows[i].split == split) keep.push_back(i);
  ds.features = m.select_rows(keep);
  ds.class_names = lf.class_names;
  for (std::size_t i : keep) ds.labels.push_back(lf.rows[i].label);
  return ds;
}

Image as_rgb(const Image& img) {
  if (img.channels() == 3) return img;
  std::vector<double> d;
  for (int c = 0; c < 3; ++c) d.insert(d.end(), img.plane(0).begin(), img.plane(0).end());
  return Image(img.width(), img.height(), 3, std::move(d));
}

void write_text(const std::string& path, const std::string& text) { write_file_atomic(path, text); }

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"Painting-domain style transfer, descriptors, classifiers and experiment protocol", "paintdomain"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads for batch stages")->check(CLI::PositiveNumber);
  app.add_flag("--verbose", g.verbose, "Progress messages on stderr");

  // stylize
  auto* stylize = app.add_subcommand("stylize", "Style transfer")->require_subcommand(1);
  std::string subject, reference, out;
  auto* lap = stylize->add_subcommand("laplacian", "Laplacian-pyramid histogram transfer");
  TransferParams tp;
  std::string color = "per_channel";
  bool no_clamp = false;
  lap->add_option("--subject", subject, "Content image")->required();
  lap->add_option("--reference", reference, "Style image")->required();
  lap->add_option("--out", out, "Output PNG")->required();
  lap->add_option("--levels", tp.levels)->capture_default_str();
  lap->add_option("--iterations", tp.iterations)->capture_default_str();
  lap->add_option("--bins", tp.bins)->capture_default_str();
  lap->add_option("--color", color, "per_channel or luminance")->capture_default_str();
  lap->add_flag("--no-clamp", no_clamp, "Skip the final clamp to [0,1]");

  auto* neu = stylize->add_subcommand("neural", "Gram-matrix neural transfer from white noise");
  std::string net_arg = "builtin", loss_log;
  double alpha = 1.0, beta = 1000.0, step = 1.0;
  int iters = 100;
  std::string net_size;
  neu->add_option("--subject", subject, "Content image")->required();
  neu->add_option("--reference", reference, "Style image")->required();
  neu->add_option("--out", out, "Output PNG")->required();
  neu->add_option("--net", net_arg, "Network file or 'builtin'")->capture_default_str();
  neu->add_option("--size", net_size, "WIDTHxHEIGHT for the built-in network (default: subject size)");
  neu->add_option("--alpha", alpha)->capture_default_str();
  neu->add_option("--beta", beta)->capture_default_str();
  neu->add_option("--iters", iters)->capture_default_str();
  neu->add_option("--step", step, "Initial step size")->capture_default_str();
  neu->add_option("--loss-log", loss_log, "CSV of the loss trajectory");

  // pyramid
  auto* pyramid = app.add_subcommand("pyramid", "Laplacian pyramid files")->require_subcommand(1);
  std::string image, pyr_file;
  int levels = 7;
  auto* pbuild = pyramid->add_subcommand("build", "Decompose an image");
  pbuild->add_option("--image", image)->required();
  pbuild->add_option("--levels", levels)->capture_default_str();
  pbuild->add_option("--out", out, "Pyramid file")->required();
  auto* precon = pyramid->add_subcommand("reconstruct", "Collapse a pyramid file");
  precon->add_option("--pyramid", pyr_file)->required();
  precon->add_option("--out", out, "Output PNG")->required();

  // features
  auto* features = app.add_subcommand("features", "Image descriptors")->require_subcommand(1);
  std::string descriptor, manifest_path, labels_out, classes_arg, resize_arg;
  auto* fext = features->add_subcommand("extract", "Describe every manifest row");
  fext->add_option("--descriptor", descriptor, "phog or plbp")->required();
  fext->add_option("--manifest", manifest_path)->required();
  fext->add_option("--out", out, "Feature matrix file")->required();
  fext->add_option("--labels-out", labels_out, "Label sidecar (default: OUT.labels)");
  fext->add_option("--classes", classes_arg, "Comma-separated class list (default: the 26 genres)");
  fext->add_option("--resize", resize_arg, "Resize to WIDTHxHEIGHT before description");

  // classify
  auto* classify = app.add_subcommand("classify", "Train and apply classifiers")->require_subcommand(1);
  std::string feat_path, labels_path, model_path, classifier = "softmax", split = "train";
  double l2 = 1e-3, c_reg = 1.0, gamma = 1.0 / 64.0;
  int epochs = 200;
  auto* ctrain = classify->add_subcommand("train", "Fit a model");
  ctrain->add_option("--features", feat_path)->required();
  ctrain->add_option("--labels", labels_path)->required();
  ctrain->add_option("--model", model_path, "Output model file")->required();
  ctrain->add_option("--classifier", classifier, "softmax or svm")->capture_default_str();
  ctrain->add_option("--split", split, "Rows used: train, test, unassigned or all")->capture_default_str();
  ctrain->add_option("--l2", l2)->capture_default_str();
  ctrain->add_option("--epochs", epochs)->capture_default_str();
  ctrain->add_option("--c", c_reg, "SVM C")->capture_default_str();
  ctrain->add_option("--gamma", gamma, "RBF gamma")->capture_default_str();
  auto* cpred = classify->add_subcommand("predict", "Score feature rows");
  std::string scores_out;
  int topk = 1;
  cpred->add_option("--features", feat_path)->required();
  cpred->add_option("--model", model_path)->required();
  cpred->add_option("--out", out, "TSV of top-k class names per row")->required();
  cpred->add_option("--scores", scores_out, "Score matrix file");
  cpred->add_option("--topk", topk)->capture_default_str();
  auto* cgrid = classify->add_subcommand("gridsearch", "Cross-validated RBF SVM parameter search");
  std::string c_grid, gamma_grid;
  int folds = 5;
  cgrid->add_option("--features", feat_path)->required();
  cgrid->add_option("--labels", labels_path)->required();
  cgrid->add_option("--out", out, "JSON result")->required();
  cgrid->add_option("--model", model_path, "Also train a model at the selected point");
  cgrid->add_option("--split", split)->capture_default_str();
  cgrid->add_option("--folds", folds)->capture_default_str();
  cgrid->add_option("--c-grid", c_grid, "Comma-separated C values");
  cgrid->add_option("--gamma-grid", gamma_grid, "Comma-separated gamma values");

  // augment
  auto* aug = app.add_subcommand("augment", "Flip and rotate training rows");
  std::string ops_arg, out_dir, out_manifest;
  aug->add_option("--manifest", manifest_path)->required();
  aug->add_option("--ops", ops_arg, "e.g. hflip,rot3,rot-3")->required();
  aug->add_option("--out-dir", out_dir)->required();
  aug->add_option("--out-manifest", out_manifest)->required();

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Domain-transfer protocol")->require_subcommand(1);
  std::string config_path;
  auto* erun = experiment->add_subcommand("run", "Run every cap x domain cell");
  erun->add_option("--config", config_path, "JSON protocol configuration")->required();
  erun->add_option("--out", out_dir, "Output directory")->required();

  // metrics
  auto* metrics = app.add_subcommand("metrics", "Evaluation metrics")->require_subcommand(1);
  std::string k_list = "1,3,5", values;
  auto* meval = metrics->add_subcommand("eval", "Top-K accuracy and confusion matrix of a score matrix");
  meval->add_option("--scores", scores_out, "Score matrix file")->required();
  meval->add_option("--labels", labels_path)->required();
  meval->add_option("--k", k_list, "Comma-separated K values")->capture_default_str();
  std::string eval_split = "test";
  meval->add_option("--split", eval_split, "Rows evaluated: test, train, unassigned or all")->capture_default_str();
  meval->add_option("--out", out, "JSON result")->required();
  auto* mstats = metrics->add_subcommand("stats", "Mean and sample standard deviation of run accuracies");
  mstats->add_option("--values", values, "Comma-separated values")->required();
  mstats->add_option("--out", out, "JSON result (default: stdout)");

  std::vector<const char*> argv{"paintdomain"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, std::cout, std::cerr);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (lap->parsed()) {
      if (color == "per_channel") tp.color_mode = ColorMode::per_channel;
      else if (color == "luminance") tp.color_mode = ColorMode::luminance;
      else throw UsageError("--color must be per_channel or luminance");
      tp.clamp_output = !no_clamp;
      usage_guard<int>([&] { tp.validate(); return 0; });
      const Image s = load_image(subject);
      const Image r = load_image(reference);
      log(g, "stylizing " + subject + " with " + reference);
      save_png(laplacian_style_transfer(s, r, tp), out);
    } else if (neu->parsed()) {
      if (iters < 0) throw UsageError("--iters must be nonnegative");
      if (!(step > 0.0)) throw UsageError("--step must be positive");
      const auto size = parse_size(net_size, "--size");
      if (size && net_arg != "builtin") throw UsageError("--size applies to the built-in network only");
      Image s = load_image(subject);
      Image r = load_image(reference);
      s = as_rgb(s);
      r = as_rgb(r);
      const FeatureNetwork net =
          net_arg == "builtin"
              ? FeatureNetwork::builtin(g.seed, size ? size->first : s.width(), size ? size->second : s.height())
              : load_network(net_arg);
      if (net.input_channels() != 3) throw IoError(net_arg + ": network must take 3-channel input");
      s = resize_bilinear(s, net.input_width(), net.input_height());
      r = resize_bilinear(r, net.input_width(), net.input_height());
      StyleConfig cfg = StyleConfig::defaults_for(net);
      cfg.alpha = alpha;
      cfg.beta = beta;
      cfg.iterations = iters;
      cfg.step_size = step;
      cfg.init_seed = g.seed;
      usage_guard<int>([&] { cfg.validate(); return 0; });
      log(g, "neural transfer: " + std::to_string(iters) + " iterations");
      const NeuralTransferResult res = neural_style_transfer(s, r, net, cfg);
      if (!loss_log.empty()) {
        std::ostringstream csv;
        csv << "iteration,loss\n";
        csv.precision(17);
        for (std::size_t i = 0; i < res.loss_trajectory.size(); ++i) csv << i << ',' << res.loss_trajectory[i] << '\n';
        write_text(loss_log, csv.str());
      }
      save_png(res.image, out);
    } else if (pbuild->parsed()) {
      if (levels < 2) throw UsageError("--levels must be at least 2");
      const Image img = load_image(image);
      save_pyramid(build_laplacian_pyramid(img, levels), out);
    } else if (precon->parsed()) {
      save_png(reconstruct(load_pyramid(pyr_file)), out);
    } else if (fext->parsed()) {
      const DescriptorId id = usage_guard<DescriptorId>([&] { return parse_descriptor(descriptor); });
      if (id == DescriptorId::none) throw UsageError("--descriptor must be phog or plbp");
      const auto size = parse_size(resize_arg, "--resize");
      const std::vector<std::string> classes = classes_arg.empty() ? default_class_names() : split_list(classes_arg);
      if (classes.size() < 2) throw UsageError("--classes needs at least two names");
      const std::string labels_file = labels_out.empty() ? out + ".labels" : labels_out;
      const DatasetManifest m = load_manifest(manifest_path);
      const auto base = std::filesystem::path(manifest_path).parent_path();
      LabelFile lf;
      lf.class_names = classes;
      for (const auto& row : m.rows) {
        const int label = class_index(classes, row.genre);
        if (label < 0) throw IoError(manifest_path + ": genre '" + row.genre + "' is not in the class list");
        lf.rows.push_back({label, split_name(row.split), row.path});
      }
      const DescriptorConfig dcfg;
      FeatureMatrix fm(m.rows.size(), descriptor_length(id, dcfg), id);
      parallel_for(m.rows.size(), g.threads, [&](std::size_t i) {
        Image img = load_image(resolve_path(base, m.rows[i].path));
        if (size) img = resize_bilinear(img, size->first, size->second);
        const auto v = extract_descriptor(id, img, dcfg).values;
        std::ranges::copy(v, fm.row(i).begin());
      });
      save_feature_matrix(fm, out);
      save_labels(lf, labels_file);
      log(g, "wrote " + std::to_string(fm.rows) + " x " + std::to_string(fm.cols) + " features");
    } else if (ctrain->parsed()) {
      if (classifier != "softmax" && classifier != "svm") throw UsageError("--classifier must be softmax or svm");
      if (epochs < 0 || !(l2 >= 0.0)) throw UsageError("--epochs and --l2 must be nonnegative");
      if (!(c_reg > 0.0) || !(gamma > 0.0)) throw UsageError("--c and --gamma must be positive");
      const LabeledDataset ds = load_dataset(feat_path, labels_path, split);
      const Model model = classifier == "softmax" ? Model(train_softmax(ds, l2, epochs, g.seed))
                                                  : Model(train_rbf_svm(ds, c_reg, gamma, g.threads));
      save_model(model, model_path);
    } else if (cpred->parsed()) {
      if (topk < 1) throw UsageError("--topk must be positive");
      const Model model = load_model(model_path);
      const auto& names = model_class_names(model);
      if (topk > static_cast<int>(names.size())) throw UsageError("--topk exceeds the class count");
      const FeatureMatrix fm = load_feature_matrix(feat_path);
      const FeatureMatrix scores = predict_score_matrix(model, fm, g.threads);
      std::ostringstream tsv;
      for (std::size_t i = 0; i < scores.rows; ++i) {
        tsv << i;
        for (int c : topk_from_scores(scores.row(i), topk)) tsv << '\t' << names[static_cast<std::size_t>(c)];
        tsv << '\n';
      }
      if (!scores_out.empty()) save_feature_matrix(scores, scores_out);
      write_text(out, tsv.str());
    } else if (cgrid->parsed()) {
      GridSearchSpec spec = GridSearchSpec::defaults();
      if (!c_grid.empty()) spec.c_grid = parse_doubles(c_grid, "--c-grid");
      if (!gamma_grid.empty()) spec.gamma_grid = parse_doubles(gamma_grid, "--gamma-grid");
      spec.folds = folds;
      spec.seed = g.seed;
      usage_guard<int>([&] { spec.validate(); return 0; });
      const LabeledDataset ds = load_dataset(feat_path, labels_path, split);
      const GridSearchResult res = grid_search(ds, spec, g.threads);
      nlohmann::ordered_json j;
      j["c"] = res.c_reg;
      j["gamma"] = res.gamma;
      j["cv_accuracy"] = res.cv_accuracy;
      j["folds"] = spec.folds;
      j["seed"] = spec.seed;
      nlohmann::ordered_json cells = nlohmann::ordered_json::array();
      for (const auto& c : res.cells) cells.push_back({{"c", c.c_reg}, {"gamma", c.gamma}, {"cv_accuracy", c.cv_accuracy}});
      j["cells"] = cells;
      if (!model_path.empty()) save_model(train_rbf_svm(ds, res.c_reg, res.gamma, g.threads), model_path);
      write_text(out, j.dump(2) + "\n");
    } else if (aug->parsed()) {
      const auto ops = usage_guard<std::vector<AugmentOp>>([&] { return parse_augment_ops(ops_arg); });
      const DatasetManifest m = load_manifest(manifest_path);
      const AugmentResult res =
          augment_manifest(m, ops, out_dir, std::filesystem::path(manifest_path).parent_path(), g.threads);
      for (const auto& e : res.errors) std::cerr << "augment: " << e << '\n';
      save_manifest(res.manifest, out_manifest);
      if (!res.errors.empty()) return kExitRuntime;
    } else if (erun->parsed()) {
      const ProtocolConfig cfg = ProtocolConfig::from_json_file(config_path, g.seed);
      const ProtocolReport report = run_protocol(cfg, g.threads);
      const std::string table = render_protocol_table(report);
      const std::string json = protocol_report_json(report);
      write_text((std::filesystem::path(out_dir) / "report.txt").string(), table);
      write_text((std::filesystem::path(out_dir) / "report.json").string(), json);
      if (g.verbose) std::cerr << table;
    } else if (meval->parsed()) {
      const std::vector<int> ks = parse_ints(k_list, "--k");
      const LabeledDataset ds = load_dataset(scores_out, labels_path, eval_split);
      if (ds.features.cols != ds.class_names.size()) throw IoError(scores_out + ": score columns do not match classes");
      const int classes = ds.class_count();
      for (int k : ks)
        if (k < 1 || k > classes) throw UsageError("--k values must lie in [1, " + std::to_string(classes) + "]");
      nlohmann::ordered_json j;
      j["rows"] = ds.labels.size();
      nlohmann::ordered_json tk = nlohmann::ordered_json::object();
      for (int k : ks) tk[std::to_string(k)] = topk_accuracy(ds.features, ds.labels, k);
      j["topk"] = tk;
      std::vector<int> pred;
      for (std::size_t i = 0; i < ds.features.rows; ++i) pred.push_back(topk_from_scores(ds.features.row(i), 1).front());
      const ConfusionMatrix cm = confusion_matrix(pred, ds.labels, classes);
      nlohmann::ordered_json rows = nlohmann::ordered_json::array();
      for (int i = 0; i < classes; ++i) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (int k = 0; k < classes; ++k) row.push_back(cm.at(i, k));
        rows.push_back(row);
      }
      j["classes"] = ds.class_names;
      j["confusion"] = rows;
      write_text(out, j.dump(2) + "\n");
    } else if (mstats->parsed()) {
      const std::vector<double> v = parse_doubles(values, "--values");
      const RunStats s = stochastic_stats(v);
      nlohmann::ordered_json j;
      j["count"] = v.size();
      j["mean"] = s.mean;
      j["std"] = s.stddev ? nlohmann::ordered_json(*s.stddev) : nlohmann::ordered_json(nullptr);
      if (out.empty()) std::cout << j.dump(2) << '\n';
      else write_text(out, j.dump(2) + "\n");
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace paintdomain
