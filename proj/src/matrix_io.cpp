#include "paintdomain/matrix_io.hpp"

#include <charconv>
#include <sstream>

#include "paintdomain/binary_io.hpp"

namespace paintdomain {

namespace {

constexpr std::string_view kMatrixMagic{"PDFM"};
constexpr std::uint32_t kMatrixVersion = 1;

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

}  // namespace

void FeatureMatrix::append_row(std::span<const double> values) {
  if (rows == 0 && cols == 0) cols = values.size();
  if (values.size() != cols) throw InvalidArgument("append_row: row length mismatch");
  data.insert(data.end(), values.begin(), values.end());
  ++rows;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
  FeatureMatrix out(indices.size(), cols, descriptor);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

std::string encode_feature_matrix(const FeatureMatrix& m) {
  ByteWriter w;
  w.bytes(kMatrixMagic);
  w.u32(kMatrixVersion);
  w.u64(m.rows);
  w.u64(m.cols);
  w.u32(static_cast<std::uint32_t>(m.descriptor));
  w.f64s(m.data);
  return w.buffer();
}

FeatureMatrix decode_feature_matrix(std::string bytes, const std::string& source) {
  ByteReader r(std::move(bytes), source);
  r.expect_magic(kMatrixMagic);
  const std::uint32_t version = r.u32();
  if (version != kMatrixVersion) throw IoError(source + ": unsupported matrix version " + std::to_string(version));
  FeatureMatrix m;
  m.rows = r.u64();
  m.cols = r.u64();
  const std::uint32_t id = r.u32();
  if (id > 2) throw IoError(source + ": unknown descriptor id " + std::to_string(id));
  m.descriptor = static_cast<DescriptorId>(id);
  if (m.cols != 0 && m.rows > r.remaining() / 8 / m.cols) throw IoError(source + ": unexpected end of data");
  m.data = r.f64s(m.rows * m.cols);
  if (!r.at_end()) throw IoError(source + ": trailing bytes after matrix");
  return m;
}

void save_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path) {
  write_file_atomic(path, encode_feature_matrix(m));
}

FeatureMatrix load_feature_matrix(const std::filesystem::path& path) {
  return decode_feature_matrix(read_file(path), path.string());
}

std::vector<int> LabelFile::labels() const {
  std::vector<int> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.label);
  return out;
}

std::string encode_labels(const LabelFile& labels) {
  std::ostringstream s;
  s << "#classes";
  for (const auto& name : labels.class_names) s << '\t' << name;
  s << '\n';
  for (const auto& r : labels.rows) {
    s << r.label << '\t' << labels.class_names.at(static_cast<std::size_t>(r.label)) << '\t' << r.split << '\t'
      << r.path << '\n';
  }
  return s.str();
}

LabelFile decode_labels(const std::string& text, const std::string& source) {
  LabelFile out;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields[0] == "#classes") {
      out.class_names.assign(fields.begin() + 1, fields.end());
      have_header = true;
      continue;
    }
    if (line[0] == '#') continue;
    if (!have_header) throw IoError(source + ": missing #classes header");
    if (fields.size() != 4) throw IoError(source + ":" + std::to_string(line_no) + ": expected 4 fields");
    LabelRecord rec;
    const auto& f0 = fields[0];
    auto [ptr, ec] = std::from_chars(f0.data(), f0.data() + f0.size(), rec.label);
    if (ec != std::errc{} || ptr != f0.data() + f0.size() || rec.label < 0 ||
        static_cast<std::size_t>(rec.label) >= out.class_names.size()) {
      throw IoError(source + ":" + std::to_string(line_no) + ": bad label '" + f0 + "'");
    }
    if (fields[1] != out.class_names[static_cast<std::size_t>(rec.label)]) {
      throw IoError(source + ":" + std::to_string(line_no) + ": class name does not match label id");
    }
    rec.split = fields[2];
    rec.path = fields[3];
    out.rows.push_back(std::move(rec));
  }
  if (!have_header) throw IoError(source + ": missing #classes header");
  return out;
}

void save_labels(const LabelFile& labels, const std::filesystem::path& path) {
  write_file_atomic(path, encode_labels(labels));
}

LabelFile load_labels(const std::filesystem::path& path) { return decode_labels(read_file(path), path.string()); }

}  // namespace paintdomain
