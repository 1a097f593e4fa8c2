#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace paintdomain {

enum class Domain { painting, normal_photo, artist_photo, stylized_laplacian, stylized_neural };
enum class Split { train, test, unassigned };

Domain parse_domain(const std::string& s);
std::string domain_name(Domain d);
Split parse_split(const std::string& s);
std::string split_name(Split s);

/// The 25 named genres followed by "others".
const std::vector<std::string>& default_class_names();

struct ManifestRow {
  std::string path;
  std::string genre;
  /// Empty when the row has no art-movement label.
  std::string style;
  Domain domain = Domain::painting;
  Split split = Split::unassigned;
  /// Empty for original rows; set on rows produced by augmentation.
  std::string provenance;

  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

/// Tab-separated records: path, genre, style, domain, split and an optional
/// provenance column. Lines starting with '#' are comments; "-" or an empty
/// field means no style.
struct DatasetManifest {
  std::vector<ManifestRow> rows;

  std::size_t count(Split s) const;
  /// Throws on duplicate paths.
  void validate() const;
  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// Class id of a genre in `classes`; genres not listed fall into the last
/// class when it is named "others", otherwise -1.
int class_index(const std::vector<std::string>& classes, const std::string& genre);

std::string encode_manifest(const DatasetManifest& m);
/// Relative paths are kept as written; callers resolve them against
/// `base_dir` through resolve_path().
DatasetManifest decode_manifest(const std::string& text, const std::string& source = "manifest");
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& m, const std::filesystem::path& path);

std::filesystem::path resolve_path(const std::filesystem::path& base_dir, const std::string& path);

}  // namespace paintdomain
