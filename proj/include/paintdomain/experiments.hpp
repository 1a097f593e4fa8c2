#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "paintdomain/classify.hpp"
#include "paintdomain/descriptors.hpp"
#include "paintdomain/manifest.hpp"

namespace paintdomain {

/// Stratified by genre: each class with n >= 2 rows puts round(ratio * n) of
/// them (seeded) in train and the rest in test. Smaller classes go entirely
/// to train with a warning.
DatasetManifest split_train_test(const DatasetManifest& m, double ratio = 0.8, std::uint64_t seed = 0,
                                 std::vector<std::string>* warnings = nullptr);

/// Rows whose style is listed go to test, all others to train. Every listed
/// style must occur in the manifest.
DatasetManifest holdout_by_style(const DatasetManifest& m, const std::vector<std::string>& styles);

/// Keeps a seeded uniform subsample of at most N train rows per genre; other
/// splits are untouched and row order is preserved.
DatasetManifest cap_per_class(const DatasetManifest& m, int cap, std::uint64_t seed = 0);

double added_image_ratio(std::size_t added, std::size_t paintings_in_train);

struct AddDomainResult {
  DatasetManifest manifest;
  std::map<std::string, std::size_t> added_per_class;
  std::size_t added = 0;
  std::size_t paintings_in_train = 0;
  /// added / paintings_in_train * 100.
  double ratio = 0.0;
  std::vector<std::string> warnings;
};

/// Appends, per requested genre, the first `count` rows of that genre from
/// `source` (in source order) to the train split.
AddDomainResult add_domain_images(const DatasetManifest& m, const DatasetManifest& source,
                                  const std::vector<std::pair<std::string, int>>& class_counts);

/// Fraction of rows whose label is among the K highest scores (ties by
/// class id). `scores` is rows x C.
double topk_accuracy(const FeatureMatrix& scores, std::span<const int> labels, int k);

struct ConfusionMatrix {
  int classes = 0;
  /// Row-major counts: entry (i, j) = true i predicted j.
  std::vector<std::size_t> counts;

  std::size_t at(int truth, int predicted) const {
    return counts[static_cast<std::size_t>(truth) * static_cast<std::size_t>(classes) +
                  static_cast<std::size_t>(predicted)];
  }
  std::size_t row_sum(int truth) const;
  /// Each nonempty row divided by its sum; empty rows stay zero.
  std::vector<double> row_normalized() const;
};

ConfusionMatrix confusion_matrix(std::span<const int> predictions, std::span<const int> labels, int classes);

struct RunStats {
  double mean = 0.0;
  /// Sample (n - 1) standard deviation; absent for fewer than two values.
  std::optional<double> stddev;
};

RunStats stochastic_stats(std::span<const double> values);

/// Mean over caps of (variant - baseline); inputs are aligned per cap.
double average_improvement(std::span<const double> baseline, std::span<const double> variant);

struct SourceDomain {
  std::string name;
  std::filesystem::path manifest;
};

enum class ClassifierKind { softmax, svm };
enum class SplitMode { random, manifest, holdout };

struct ProtocolConfig {
  std::filesystem::path paintings;
  std::vector<std::string> classes = default_class_names();
  /// Per-class train caps; nullopt means "All".
  std::vector<std::optional<int>> caps{250, 500, 1000, 5000, std::nullopt};
  std::vector<std::pair<std::string, int>> transfer_classes{{"cityscape", 2903}, {"landscape", 4467}, {"portrait", 4002}};
  std::vector<SourceDomain> sources;
  SplitMode split = SplitMode::random;
  double split_ratio = 0.8;
  std::vector<std::string> holdout_styles;
  DescriptorId descriptor = DescriptorId::phog;
  DescriptorConfig descriptor_config;
  /// Images are resized to this size before description when set.
  std::optional<std::pair<int, int>> resize;
  ClassifierKind classifier = ClassifierKind::softmax;
  double l2 = 1e-3;
  int epochs = 200;
  double svm_c = 1.0;
  double svm_gamma = 1.0 / 64.0;
  std::vector<int> topk{1, 3, 5};
  /// One protocol run per seed.
  std::vector<std::uint64_t> seeds{0};

  void validate() const;
  /// Reads the JSON form; relative paths resolve against the file's folder.
  /// Without an explicit "seeds" list, "runs" consecutive seeds starting at
  /// `default_seed` are used.
  static ProtocolConfig from_json_file(const std::filesystem::path& path, std::uint64_t default_seed = 0);
  static ProtocolConfig from_json_text(const std::string& text, const std::filesystem::path& base_dir,
                                       std::uint64_t default_seed = 0);
};

struct ProtocolCell {
  std::string domain;
  std::optional<int> cap;
  std::vector<double> accuracies;
  RunStats stats;
  std::vector<double> topk_mean;
  /// Confusion counts of the first run.
  ConfusionMatrix confusion;
  std::size_t train_rows_first_run = 0;
  std::size_t test_rows_first_run = 0;
  std::size_t added_first_run = 0;
  double added_ratio_mean = 0.0;
  std::optional<std::string> failure;
};

struct ProtocolReport {
  std::vector<std::string> domains;
  std::vector<std::optional<int>> caps;
  std::vector<int> topk;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> classes;
  /// domains.size() x caps.size(), row-major; domain 0 is the baseline.
  std::vector<ProtocolCell> cells;
  std::vector<std::string> warnings;

  const ProtocolCell& cell(std::size_t domain, std::size_t cap) const { return cells[domain * caps.size() + cap]; }
  /// Mean accuracy gain in percentage points over the baseline at cap index.
  std::optional<double> improvement(std::size_t domain, std::size_t cap) const;
  std::optional<double> best_improvement(std::size_t cap) const;
  std::optional<double> added_ratio(std::size_t cap) const;
  std::optional<double> avg_improvement(std::size_t domain) const;
};

ProtocolReport run_protocol(const ProtocolConfig& config, int threads = 1);

/// Human-readable table: one row per domain with mean recognition rates [%]
/// per cap plus an "Avg. Improv." column, then "Best-improvement" and
/// "Added image ratio" rows. Two decimals throughout.
std::string render_protocol_table(const ProtocolReport& report);
std::string protocol_report_json(const ProtocolReport& report);

}  // namespace paintdomain
