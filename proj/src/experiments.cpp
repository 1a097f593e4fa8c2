#include "paintdomain/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "json.hpp"

#include "paintdomain/binary_io.hpp"
#include "paintdomain/image_io.hpp"
#include "paintdomain/parallel.hpp"
#include "paintdomain/random.hpp"

namespace paintdomain {

namespace {

using ojson = nlohmann::ordered_json;

/// Row indices grouped by genre, genres in sorted order, rows in manifest order.
std::map<std::string, std::vector<std::size_t>> rows_by_genre(const DatasetManifest& m,
                                                              std::optional<Split> only = std::nullopt) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    if (only && m.rows[i].split != *only) continue;
    groups[m.rows[i].genre].push_back(i);
  }
  return groups;
}

std::string format_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string cap_label(const std::optional<int>& cap) { return cap ? std::to_string(*cap) : "All"; }

DatasetManifest with_resolved_paths(DatasetManifest m, const std::filesystem::path& base_dir) {
  for (auto& r : m.rows) r.path = resolve_path(base_dir, r.path).lexically_normal().string();
  return m;
}

struct FeatureCache {
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<double>> values;
  std::vector<std::string> errors;

  const std::vector<double>* find(const std::string& path, std::string* error) const {
    const auto it = index.find(path);
    if (it == index.end()) {
      *error = "no features for " + path;
      return nullptr;
    }
    if (!errors[it->second].empty()) {
      *error = errors[it->second];
      return nullptr;
    }
    return &values[it->second];
  }
};

FeatureCache extract_all(const std::vector<std::string>& paths, const ProtocolConfig& cfg, int threads) {
  FeatureCache cache;
  for (const auto& p : paths) cache.index.emplace(p, cache.index.size());
  std::vector<std::string> ordered(cache.index.size());
  for (const auto& [p, i] : cache.index) ordered[i] = p;
  cache.values.resize(ordered.size());
  cache.errors.resize(ordered.size());
  parallel_for(ordered.size(), threads, [&](std::size_t i) {
    try {
      Image img = load_image(ordered[i]);
      if (cfg.resize) img = resize_bilinear(img, cfg.resize->first, cfg.resize->second);
      cache.values[i] = extract_descriptor(cfg.descriptor, img, cfg.descriptor_config).values;
    } catch (const std::exception& e) {
      cache.errors[i] = ordered[i] + ": " + e.what();
    }
  });
  return cache;
}

struct CellJob {
  std::size_t run;
  std::size_t domain;
  std::size_t cap;
};

struct CellOutcome {
  double accuracy = 0.0;
  std::vector<double> topk;
  ConfusionMatrix confusion;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  std::size_t added = 0;
  double ratio = 0.0;
  std::vector<std::string> warnings;
  std::string failure;
};

LabeledDataset dataset_for(const DatasetManifest& m, Split split, const ProtocolConfig& cfg,
                           const FeatureCache& cache) {
  LabeledDataset ds;
  ds.class_names = cfg.classes;
  ds.features.descriptor = cfg.descriptor;
  for (const auto& r : m.rows) {
    if (r.split != split) continue;
    const int label = class_index(cfg.classes, r.genre);
    if (label < 0) throw InvalidArgument("genre '" + r.genre + "' is not in the class list");
    std::string error;
    const auto* f = cache.find(r.path, &error);
    if (!f) throw IoError(error);
    ds.features.append_row(*f);
    ds.labels.push_back(label);
  }
  return ds;
}

Model train_model(const LabeledDataset& ds, const ProtocolConfig& cfg, std::uint64_t seed) {
  if (cfg.classifier == ClassifierKind::softmax) return train_softmax(ds, cfg.l2, cfg.epochs, seed);
  return train_rbf_svm(ds, cfg.svm_c, cfg.svm_gamma, 1);
}

ojson optional_number(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

}  // namespace

DatasetManifest split_train_test(const DatasetManifest& m, double ratio, std::uint64_t seed,
                                 std::vector<std::string>* warnings) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidArgument("split ratio must lie in (0, 1)");
  DatasetManifest out = m;
  Rng rng(seed);
  for (auto& [genre, idx] : rows_by_genre(m)) {
    if (idx.size() < 2) {
      if (warnings) warnings->push_back("class '" + genre + "' has fewer than 2 rows; all assigned to train");
      for (std::size_t i : idx) out.rows[i].split = Split::train;
      continue;
    }
    shuffle(std::span(idx), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(idx.size())));
    for (std::size_t k = 0; k < idx.size(); ++k) out.rows[idx[k]].split = k < n_train ? Split::train : Split::test;
  }
  return out;
}

DatasetManifest holdout_by_style(const DatasetManifest& m, const std::vector<std::string>& styles) {
  std::set<std::string> present;
  for (const auto& r : m.rows) present.insert(r.style);
  for (const auto& s : styles) {
    if (s.empty() || !present.contains(s)) throw InvalidArgument("unknown style '" + s + "'");
  }
  const std::set<std::string> wanted(styles.begin(), styles.end());
  DatasetManifest out = m;
  for (auto& r : out.rows) r.split = wanted.contains(r.style) ? Split::test : Split::train;
  return out;
}

DatasetManifest cap_per_class(const DatasetManifest& m, int cap, std::uint64_t seed) {
  if (cap <= 0) throw InvalidArgument("cap must be positive");
  std::vector<bool> keep(m.rows.size(), true);
  Rng rng(seed);
  for (auto& [genre, idx] : rows_by_genre(m, Split::train)) {
    if (idx.size() <= static_cast<std::size_t>(cap)) continue;
    shuffle(std::span(idx), rng);
    for (std::size_t k = static_cast<std::size_t>(cap); k < idx.size(); ++k) keep[idx[k]] = false;
  }
  DatasetManifest out;
  for (std::size_t i = 0; i < m.rows.size(); ++i)
    if (keep[i]) out.rows.push_back(m.rows[i]);
  return out;
}

double added_image_ratio(std::size_t added, std::size_t paintings_in_train) {
  if (paintings_in_train == 0) return 0.0;
  return static_cast<double>(added) / static_cast<double>(paintings_in_train) * 100.0;
}

AddDomainResult add_domain_images(const DatasetManifest& m, const DatasetManifest& source,
                                  const std::vector<std::pair<std::string, int>>& class_counts) {
  AddDomainResult r;
  r.manifest = m;
  r.paintings_in_train = static_cast<std::size_t>(std::ranges::count_if(
      m.rows, [](const ManifestRow& row) { return row.split == Split::train && row.domain == Domain::painting; }));
  std::set<std::string> paths;
  for (const auto& row : m.rows) paths.insert(row.path);
  for (const auto& [genre, count] : class_counts) {
    if (count < 0) throw InvalidArgument("negative transfer count for '" + genre + "'");
    std::size_t added = 0;
    for (const auto& row : source.rows) {
      if (added >= static_cast<std::size_t>(count)) break;
      if (row.genre != genre) continue;
      if (!paths.insert(row.path).second) throw InvalidArgument("source row duplicates path '" + row.path + "'");
      ManifestRow copy = row;
      copy.split = Split::train;
      r.manifest.rows.push_back(std::move(copy));
      ++added;
    }
    if (added < static_cast<std::size_t>(count)) {
      r.warnings.push_back("source has " + std::to_string(added) + " rows of '" + genre + "', " +
                           std::to_string(count) + " requested");
    }
    r.added_per_class[genre] += added;
    r.added += added;
  }
  if (r.added > 0 && r.paintings_in_train == 0) r.warnings.push_back("no paintings in train; ratio reported as 0");
  r.ratio = added_image_ratio(r.added, r.paintings_in_train);
  return r;
}

double topk_accuracy(const FeatureMatrix& scores, std::span<const int> labels, int k) {
  if (scores.rows != labels.size()) throw InvalidArgument("topk_accuracy: score rows and labels differ in length");
  if (scores.rows == 0) throw InvalidArgument("topk_accuracy: no rows");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < scores.rows; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= scores.cols)
      throw InvalidArgument("topk_accuracy: label out of range");
    const auto top = topk_from_scores(scores.row(i), k);
    if (std::ranges::find(top, labels[i]) != top.end()) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(scores.rows);
}

std::size_t ConfusionMatrix::row_sum(int truth) const {
  std::size_t s = 0;
  for (int j = 0; j < classes; ++j) s += at(truth, j);
  return s;
}

std::vector<double> ConfusionMatrix::row_normalized() const {
  std::vector<double> out(counts.size(), 0.0);
  for (int i = 0; i < classes; ++i) {
    const std::size_t s = row_sum(i);
    if (s == 0) continue;
    for (int j = 0; j < classes; ++j) {
      const auto idx = static_cast<std::size_t>(i) * static_cast<std::size_t>(classes) + static_cast<std::size_t>(j);
      out[idx] = static_cast<double>(counts[idx]) / static_cast<double>(s);
    }
  }
  return out;
}

ConfusionMatrix confusion_matrix(std::span<const int> predictions, std::span<const int> labels, int classes) {
  if (classes < 1) throw InvalidArgument("confusion_matrix: class count must be positive");
  if (predictions.size() != labels.size()) throw InvalidArgument("confusion_matrix: length mismatch");
  ConfusionMatrix cm{classes, std::vector<std::size_t>(static_cast<std::size_t>(classes) * static_cast<std::size_t>(classes), 0)};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes || predictions[i] < 0 || predictions[i] >= classes)
      throw InvalidArgument("confusion_matrix: label out of range");
    ++cm.counts[static_cast<std::size_t>(labels[i]) * static_cast<std::size_t>(classes) +
                static_cast<std::size_t>(predictions[i])];
  }
  return cm;
}

RunStats stochastic_stats(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("stochastic_stats: no values");
  RunStats s;
  // Sorted accumulation keeps the result independent of input order.
  std::vector<double> v(values.begin(), values.end());
  std::ranges::sort(v);
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() >= 2) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

double average_improvement(std::span<const double> baseline, std::span<const double> variant) {
  if (baseline.size() != variant.size() || baseline.empty())
    throw InvalidArgument("average_improvement: need equally many nonzero entries");
  double sum = 0.0;
  for (std::size_t i = 0; i < baseline.size(); ++i) sum += variant[i] - baseline[i];
  return sum / static_cast<double>(baseline.size());
}

void ProtocolConfig::validate() const {
  if (paintings.empty()) throw InvalidArgument("protocol: paintings manifest not set");
  if (classes.size() < 2) throw InvalidArgument("protocol: at least two classes required");
  if (std::set<std::string>(classes.begin(), classes.end()).size() != classes.size())
    throw InvalidArgument("protocol: duplicate class names");
  if (caps.empty()) throw InvalidArgument("protocol: no caps");
  for (std::size_t i = 0; i < caps.size(); ++i) {
    if (!caps[i]) {
      if (i + 1 != caps.size()) throw InvalidArgument("protocol: \"All\" must be the last cap");
      continue;
    }
    if (*caps[i] <= 0) throw InvalidArgument("protocol: caps must be positive");
    if (i > 0 && caps[i - 1] && *caps[i] <= *caps[i - 1]) throw InvalidArgument("protocol: caps must ascend");
  }
  for (const auto& [genre, count] : transfer_classes) {
    if (std::ranges::find(classes, genre) == classes.end())
      throw InvalidArgument("protocol: transfer class '" + genre + "' is not a genre class");
    if (count < 0) throw InvalidArgument("protocol: negative transfer count");
  }
  std::set<std::string> names{"None"};
  for (const auto& s : sources) {
    if (s.name.empty() || !names.insert(s.name).second)
      throw InvalidArgument("protocol: source names must be unique, nonempty and not 'None'");
  }
  if (split == SplitMode::random && !(split_ratio > 0.0 && split_ratio < 1.0))
    throw InvalidArgument("protocol: split_ratio must lie in (0, 1)");
  if (descriptor == DescriptorId::none) throw InvalidArgument("protocol: descriptor required");
  descriptor_config.validate();
  if (resize && (resize->first < 1 || resize->second < 1)) throw InvalidArgument("protocol: bad resize");
  if (epochs < 0 || !(l2 >= 0.0)) throw InvalidArgument("protocol: bad softmax parameters");
  if (!(svm_c > 0.0) || !(svm_gamma > 0.0)) throw InvalidArgument("protocol: bad SVM parameters");
  for (int k : topk) {
    if (k < 1 || k > static_cast<int>(classes.size())) throw InvalidArgument("protocol: top-k outside [1, C]");
  }
  if (seeds.empty()) throw InvalidArgument("protocol: no seeds");
}

ProtocolConfig ProtocolConfig::from_json_file(const std::filesystem::path& path, std::uint64_t default_seed) {
  return from_json_text(read_file(path), path.parent_path(), default_seed);
}

ProtocolConfig ProtocolConfig::from_json_text(const std::string& text, const std::filesystem::path& base_dir,
                                              std::uint64_t default_seed) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const std::exception& e) {
    throw InvalidArgument(std::string("protocol config: ") + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("protocol config: top level must be an object");
  static const std::set<std::string> known{
      "paintings", "classes", "caps",    "transfer_classes", "sources",  "split",     "split_ratio",
      "holdout_styles", "descriptor", "grid_levels", "hog_bins", "resize", "classifier", "l2",
      "epochs",    "svm_c",   "svm_gamma", "topk",           "seeds",    "runs"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw InvalidArgument("protocol config: unknown key '" + key + "'");
  }
  ProtocolConfig c;
  try {
    c.paintings = resolve_path(base_dir, j.at("paintings").get<std::string>());
    if (j.contains("classes")) c.classes = j["classes"].get<std::vector<std::string>>();
    if (j.contains("caps")) {
      c.caps.clear();
      for (const auto& v : j["caps"]) {
        if (v.is_string()) {
          const auto s = v.get<std::string>();
          if (s != "all" && s != "All") throw InvalidArgument("protocol config: cap '" + s + "'");
          c.caps.emplace_back(std::nullopt);
        } else {
          c.caps.emplace_back(v.get<int>());
        }
      }
    }
    if (j.contains("transfer_classes")) {
      c.transfer_classes.clear();
      for (const auto& [k, v] : j["transfer_classes"].items()) c.transfer_classes.emplace_back(k, v.get<int>());
    }
    if (j.contains("sources")) {
      for (const auto& s : j["sources"]) {
        c.sources.push_back({s.at("name").get<std::string>(),
                             resolve_path(base_dir, s.at("manifest").get<std::string>())});
      }
    }
    if (j.contains("split")) {
      const auto s = j["split"].get<std::string>();
      if (s == "random") c.split = SplitMode::random;
      else if (s == "manifest") c.split = SplitMode::manifest;
      else if (s == "holdout") c.split = SplitMode::holdout;
      else throw InvalidArgument("protocol config: unknown split '" + s + "'");
    }
    if (j.contains("split_ratio")) c.split_ratio = j["split_ratio"].get<double>();
    if (j.contains("holdout_styles")) c.holdout_styles = j["holdout_styles"].get<std::vector<std::string>>();
    if (j.contains("descriptor")) c.descriptor = parse_descriptor(j["descriptor"].get<std::string>());
    if (j.contains("grid_levels")) c.descriptor_config.grid_levels = j["grid_levels"].get<std::vector<int>>();
    if (j.contains("hog_bins")) c.descriptor_config.hog_bins = j["hog_bins"].get<int>();
    if (j.contains("resize")) {
      const auto r = j["resize"].get<std::vector<int>>();
      if (r.size() != 2) throw InvalidArgument("protocol config: resize needs [width, height]");
      c.resize = std::pair{r[0], r[1]};
    }
    if (j.contains("classifier")) {
      const auto s = j["classifier"].get<std::string>();
      if (s == "softmax") c.classifier = ClassifierKind::softmax;
      else if (s == "svm") c.classifier = ClassifierKind::svm;
      else throw InvalidArgument("protocol config: unknown classifier '" + s + "'");
    }
    if (j.contains("l2")) c.l2 = j["l2"].get<double>();
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    if (j.contains("svm_c")) c.svm_c = j["svm_c"].get<double>();
    if (j.contains("svm_gamma")) c.svm_gamma = j["svm_gamma"].get<double>();
    if (j.contains("topk")) c.topk = j["topk"].get<std::vector<int>>();
    if (j.contains("seeds")) {
      c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    } else {
      const int runs = j.value("runs", 1);
      if (runs < 1) throw InvalidArgument("protocol config: runs must be positive");
      c.seeds.clear();
      for (int i = 0; i < runs; ++i) c.seeds.push_back(default_seed + static_cast<std::uint64_t>(i));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("protocol config: ") + e.what());
  }
  // Keep only the top-k values the class count admits.
  std::erase_if(c.topk, [&](int k) { return k > static_cast<int>(c.classes.size()); });
  c.validate();
  return c;
}

std::optional<double> ProtocolReport::improvement(std::size_t domain, std::size_t cap) const {
  const auto& b = cell(0, cap);
  const auto& v = cell(domain, cap);
  if (b.failure || v.failure) return std::nullopt;
  return (v.stats.mean - b.stats.mean) * 100.0;
}

std::optional<double> ProtocolReport::best_improvement(std::size_t cap) const {
  std::optional<double> best;
  for (std::size_t d = 1; d < domains.size(); ++d) {
    const auto imp = improvement(d, cap);
    if (imp && (!best || *imp > *best)) best = imp;
  }
  return best;
}

std::optional<double> ProtocolReport::added_ratio(std::size_t cap) const {
  double sum = 0.0;
  int n = 0;
  for (std::size_t d = 1; d < domains.size(); ++d) {
    const auto& c = cell(d, cap);
    if (c.failure) continue;
    sum += c.added_ratio_mean;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

std::optional<double> ProtocolReport::avg_improvement(std::size_t domain) const {
  std::vector<double> base, var;
  for (std::size_t c = 0; c < caps.size(); ++c) {
    if (cell(0, c).failure || cell(domain, c).failure) return std::nullopt;
    base.push_back(cell(0, c).stats.mean * 100.0);
    var.push_back(cell(domain, c).stats.mean * 100.0);
  }
  return average_improvement(base, var);
}

ProtocolReport run_protocol(const ProtocolConfig& config, int threads) {
  config.validate();
  ProtocolReport report;
  report.caps = config.caps;
  report.topk = config.topk;
  report.seeds = config.seeds;
  report.classes = config.classes;
  report.domains.push_back("None");
  for (const auto& s : config.sources) report.domains.push_back(s.name);
  std::set<std::string> warnings;

  const DatasetManifest paintings =
      with_resolved_paths(load_manifest(config.paintings), config.paintings.parent_path());
  for (const auto& r : paintings.rows) {
    if (class_index(config.classes, r.genre) < 0)
      throw InvalidArgument(config.paintings.string() + ": genre '" + r.genre + "' is not in the class list");
  }

  std::vector<std::optional<DatasetManifest>> sources;
  std::vector<std::string> source_errors;
  for (const auto& s : config.sources) {
    try {
      sources.emplace_back(with_resolved_paths(load_manifest(s.manifest), s.manifest.parent_path()));
      source_errors.emplace_back();
    } catch (const std::exception& e) {
      sources.emplace_back(std::nullopt);
      source_errors.emplace_back(e.what());
    }
  }

  std::vector<std::string> paths;
  for (const auto& r : paintings.rows) paths.push_back(r.path);
  for (const auto& src : sources) {
    if (!src) continue;
    for (const auto& [genre, count] : config.transfer_classes) {
      int taken = 0;
      for (const auto& r : src->rows) {
        if (taken >= count) break;
        if (r.genre != genre) continue;
        paths.push_back(r.path);
        ++taken;
      }
    }
  }
  const FeatureCache cache = extract_all(paths, config, threads);

  std::vector<DatasetManifest> splits;
  for (std::size_t run = 0; run < config.seeds.size(); ++run) {
    std::vector<std::string> w;
    switch (config.split) {
      case SplitMode::random: splits.push_back(split_train_test(paintings, config.split_ratio, config.seeds[run], &w)); break;
      case SplitMode::manifest: splits.push_back(paintings); break;
      case SplitMode::holdout: splits.push_back(holdout_by_style(paintings, config.holdout_styles)); break;
    }
    warnings.insert(w.begin(), w.end());
  }

  std::vector<CellJob> jobs;
  for (std::size_t run = 0; run < config.seeds.size(); ++run)
    for (std::size_t d = 0; d < report.domains.size(); ++d)
      for (std::size_t c = 0; c < config.caps.size(); ++c) jobs.push_back({run, d, c});

  std::vector<CellOutcome> outcomes(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t j) {
    const CellJob& job = jobs[j];
    CellOutcome& out = outcomes[j];
    try {
      const std::uint64_t seed = config.seeds[job.run];
      DatasetManifest m = config.caps[job.cap] ? cap_per_class(splits[job.run], *config.caps[job.cap], seed)
                                               : splits[job.run];
      if (job.domain > 0) {
        const auto& src = sources[job.domain - 1];
        if (!src) throw IoError(source_errors[job.domain - 1]);
        AddDomainResult added = add_domain_images(m, *src, config.transfer_classes);
        out.added = added.added;
        out.ratio = added.ratio;
        out.warnings = std::move(added.warnings);
        m = std::move(added.manifest);
      }
      const LabeledDataset train = dataset_for(m, Split::train, config, cache);
      const LabeledDataset test = dataset_for(m, Split::test, config, cache);
      if (test.labels.empty()) throw InvalidArgument("empty test split");
      out.train_rows = train.labels.size();
      out.test_rows = test.labels.size();
      const Model model = train_model(train, config, seed);
      const FeatureMatrix scores = predict_score_matrix(model, test.features, 1);
      std::vector<int> predictions;
      for (std::size_t i = 0; i < scores.rows; ++i) predictions.push_back(topk_from_scores(scores.row(i), 1).front());
      out.confusion = confusion_matrix(predictions, test.labels, test.class_count());
      std::size_t correct = 0;
      for (std::size_t i = 0; i < predictions.size(); ++i) correct += predictions[i] == test.labels[i] ? 1 : 0;
      out.accuracy = static_cast<double>(correct) / static_cast<double>(predictions.size());
      for (int k : config.topk) out.topk.push_back(topk_accuracy(scores, test.labels, k));
    } catch (const std::exception& e) {
      out.failure = e.what();
    }
  });

  for (std::size_t d = 0; d < report.domains.size(); ++d) {
    for (std::size_t c = 0; c < config.caps.size(); ++c) {
      ProtocolCell cell;
      cell.domain = report.domains[d];
      cell.cap = config.caps[c];
      cell.topk_mean.assign(config.topk.size(), 0.0);
      double ratio_sum = 0.0;
      for (std::size_t run = 0; run < config.seeds.size(); ++run) {
        const CellOutcome& o = outcomes[(run * report.domains.size() + d) * config.caps.size() + c];
        warnings.insert(o.warnings.begin(), o.warnings.end());
        if (!o.failure.empty()) {
          if (!cell.failure) cell.failure = "seed " + std::to_string(config.seeds[run]) + ": " + o.failure;
          continue;
        }
        cell.accuracies.push_back(o.accuracy);
        for (std::size_t k = 0; k < o.topk.size(); ++k) cell.topk_mean[k] += o.topk[k];
        ratio_sum += o.ratio;
        if (run == 0) {
          cell.confusion = o.confusion;
          cell.train_rows_first_run = o.train_rows;
          cell.test_rows_first_run = o.test_rows;
          cell.added_first_run = o.added;
        }
      }
      if (!cell.failure) {
        cell.stats = stochastic_stats(cell.accuracies);
        for (double& v : cell.topk_mean) v /= static_cast<double>(config.seeds.size());
        cell.added_ratio_mean = ratio_sum / static_cast<double>(config.seeds.size());
      } else {
        cell.accuracies.clear();
        cell.topk_mean.clear();
      }
      report.cells.push_back(std::move(cell));
    }
  }
  report.warnings.assign(warnings.begin(), warnings.end());
  return report;
}

std::string render_protocol_table(const ProtocolReport& report) {
  constexpr int kLabelWidth = 20;
  constexpr int kColWidth = 10;
  std::string out = "Recognition rates [%]\n";
  auto pad_left = [](const std::string& s, int w) {
    return s.size() >= static_cast<std::size_t>(w) ? s : std::string(static_cast<std::size_t>(w) - s.size(), ' ') + s;
  };
  auto pad_right = [](const std::string& s, int w) {
    return s.size() >= static_cast<std::size_t>(w) ? s : s + std::string(static_cast<std::size_t>(w) - s.size(), ' ');
  };
  auto opt = [](const std::optional<double>& v) { return v ? format_fixed(*v) : std::string("n/a"); };

  out += pad_right("Domain", kLabelWidth);
  for (const auto& cap : report.caps) out += pad_left(cap_label(cap), kColWidth);
  out += pad_left("Avg. Improv.", kColWidth + 4) + "\n";
  for (std::size_t d = 0; d < report.domains.size(); ++d) {
    out += pad_right(report.domains[d], kLabelWidth);
    for (std::size_t c = 0; c < report.caps.size(); ++c) {
      const auto& cell = report.cell(d, c);
      out += pad_left(cell.failure ? "n/a" : format_fixed(cell.stats.mean * 100.0), kColWidth);
    }
    out += pad_left(opt(report.avg_improvement(d)), kColWidth + 4) + "\n";
  }
  out += pad_right("Best-improvement", kLabelWidth);
  for (std::size_t c = 0; c < report.caps.size(); ++c) out += pad_left(opt(report.best_improvement(c)), kColWidth);
  out += "\n";
  out += pad_right("Added image ratio", kLabelWidth);
  for (std::size_t c = 0; c < report.caps.size(); ++c) out += pad_left(opt(report.added_ratio(c)), kColWidth);
  out += "\n";

  if (report.seeds.size() > 1) {
    out += "\nStandard deviation over " + std::to_string(report.seeds.size()) + " runs [%]\n";
    for (std::size_t d = 0; d < report.domains.size(); ++d) {
      out += pad_right(report.domains[d], kLabelWidth);
      for (std::size_t c = 0; c < report.caps.size(); ++c) {
        const auto& cell = report.cell(d, c);
        out += pad_left(cell.failure || !cell.stats.stddev ? "n/a" : format_fixed(*cell.stats.stddev * 100.0),
                        kColWidth);
      }
      out += "\n";
    }
  }
  bool header = false;
  for (const auto& cell : report.cells) {
    if (!cell.failure) continue;
    if (!header) out += "\nFailures\n";
    header = true;
    out += cell.domain + " @ " + cap_label(cell.cap) + ": " + *cell.failure + "\n";
  }
  if (!report.warnings.empty()) {
    out += "\nWarnings\n";
    for (const auto& w : report.warnings) out += w + "\n";
  }
  return out;
}

std::string protocol_report_json(const ProtocolReport& report) {
  ojson j;
  j["classes"] = report.classes;
  j["seeds"] = report.seeds;
  j["topk"] = report.topk;
  ojson caps = ojson::array();
  for (const auto& c : report.caps) caps.push_back(cap_label(c));
  j["caps"] = caps;
  j["domains"] = report.domains;
  ojson cells = ojson::array();
  for (std::size_t d = 0; d < report.domains.size(); ++d) {
    for (std::size_t c = 0; c < report.caps.size(); ++c) {
      const auto& cell = report.cell(d, c);
      ojson e;
      e["domain"] = cell.domain;
      e["cap"] = cap_label(cell.cap);
      if (cell.failure) {
        e["failure"] = *cell.failure;
      } else {
        e["accuracies"] = cell.accuracies;
        e["mean"] = cell.stats.mean;
        e["std"] = optional_number(cell.stats.stddev);
        e["topk_mean"] = cell.topk_mean;
        e["improvement_pp"] = optional_number(report.improvement(d, c));
        e["train_rows_first_run"] = cell.train_rows_first_run;
        e["test_rows_first_run"] = cell.test_rows_first_run;
        e["added_first_run"] = cell.added_first_run;
        e["added_image_ratio"] = cell.added_ratio_mean;
        ojson rows = ojson::array();
        for (int i = 0; i < cell.confusion.classes; ++i) {
          ojson row = ojson::array();
          for (int k = 0; k < cell.confusion.classes; ++k) row.push_back(cell.confusion.at(i, k));
          rows.push_back(row);
        }
        e["confusion_first_run"] = rows;
      }
      cells.push_back(e);
    }
  }
  j["cells"] = cells;
  ojson best = ojson::array(), ratio = ojson::array(), avg = ojson::object();
  for (std::size_t c = 0; c < report.caps.size(); ++c) {
    best.push_back(optional_number(report.best_improvement(c)));
    ratio.push_back(optional_number(report.added_ratio(c)));
  }
  for (std::size_t d = 0; d < report.domains.size(); ++d)
    avg[report.domains[d]] = optional_number(report.avg_improvement(d));
  j["best_improvement_pp"] = best;
  j["added_image_ratio"] = ratio;
  j["avg_improvement_pp"] = avg;
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

}  // namespace paintdomain
