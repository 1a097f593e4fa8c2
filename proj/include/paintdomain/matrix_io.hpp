#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "paintdomain/descriptors.hpp"

namespace paintdomain {

/// Dense row-major matrix of feature vectors.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
  DescriptorId descriptor = DescriptorId::none;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c, DescriptorId id = DescriptorId::none)
      : rows(r), cols(c), data(r * c, 0.0), descriptor(id) {}

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  void append_row(std::span<const double> values);
  FeatureMatrix select_rows(std::span<const std::size_t> indices) const;
};

/// Binary layout: "PDFM", u32 version (1), u64 rows, u64 cols, u32
/// descriptor id (0 none, 1 phog, 2 plbp), then rows*cols f64 row-major.
/// Little-endian.
std::string encode_feature_matrix(const FeatureMatrix& m);
FeatureMatrix decode_feature_matrix(std::string bytes, const std::string& source = "features");
void save_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix load_feature_matrix(const std::filesystem::path& path);

struct LabelRecord {
  int label = 0;
  std::string split;
  std::string path;
};

/// Sidecar labels: a "#classes" line listing class names tab-separated,
/// then one "label<TAB>class<TAB>split<TAB>path" line per matrix row.
struct LabelFile {
  std::vector<std::string> class_names;
  std::vector<LabelRecord> rows;

  std::vector<int> labels() const;
};

std::string encode_labels(const LabelFile& labels);
LabelFile decode_labels(const std::string& text, const std::string& source = "labels");
void save_labels(const LabelFile& labels, const std::filesystem::path& path);
LabelFile load_labels(const std::filesystem::path& path);

}  // namespace paintdomain
