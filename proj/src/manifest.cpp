#include "paintdomain/manifest.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "paintdomain/binary_io.hpp"
#include "paintdomain/image.hpp"

namespace paintdomain {

namespace {

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

Domain parse_domain(const std::string& s) {
  if (s == "painting") return Domain::painting;
  if (s == "normal_photo") return Domain::normal_photo;
  if (s == "artist_photo") return Domain::artist_photo;
  if (s == "stylized_laplacian") return Domain::stylized_laplacian;
  if (s == "stylized_neural") return Domain::stylized_neural;
  throw InvalidArgument("unknown domain '" + s + "'");
}

std::string domain_name(Domain d) {
  switch (d) {
    case Domain::painting: return "painting";
    case Domain::normal_photo: return "normal_photo";
    case Domain::artist_photo: return "artist_photo";
    case Domain::stylized_laplacian: return "stylized_laplacian";
    case Domain::stylized_neural: return "stylized_neural";
  }
  return "painting";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  if (s == "unassigned" || s.empty()) return Split::unassigned;
  throw InvalidArgument("unknown split '" + s + "'");
}

std::string split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::test: return "test";
    case Split::unassigned: return "unassigned";
  }
  return "unassigned";
}

const std::vector<std::string>& default_class_names() {
  static const std::vector<std::string> names{
      "abstract_art",     "allegorical_painting", "animal_painting",    "battle_painting",
      "cityscape",        "design",               "figurative",         "flower_painting",
      "genre_painting",   "history_painting",     "illustration",       "interior",
      "landscape",        "literary_painting",    "marina",             "mythological_painting",
      "nude_painting",    "portrait",             "poster",             "religious_painting",
      "self_portrait",    "sketch_and_study",     "still_life",         "symbolic_painting",
      "wildlife_painting", "others"};
  return names;
}

std::size_t DatasetManifest::count(Split s) const {
  return static_cast<std::size_t>(std::ranges::count_if(rows, [s](const ManifestRow& r) { return r.split == s; }));
}

void DatasetManifest::validate() const {
  std::set<std::string> seen;
  for (const auto& r : rows) {
    if (r.path.empty()) throw InvalidArgument("manifest: empty path");
    if (!seen.insert(r.path).second) throw InvalidArgument("manifest: duplicate path '" + r.path + "'");
  }
}

int class_index(const std::vector<std::string>& classes, const std::string& genre) {
  const auto it = std::ranges::find(classes, genre);
  if (it != classes.end()) return static_cast<int>(it - classes.begin());
  if (!classes.empty() && classes.back() == "others") return static_cast<int>(classes.size()) - 1;
  return -1;
}

std::string encode_manifest(const DatasetManifest& m) {
  std::ostringstream s;
  s << "# path\tgenre\tstyle\tdomain\tsplit\tprovenance\n";
  for (const auto& r : m.rows) {
    s << r.path << '\t' << r.genre << '\t' << (r.style.empty() ? "-" : r.style) << '\t' << domain_name(r.domain)
      << '\t' << split_name(r.split);
    if (!r.provenance.empty()) s << '\t' << r.provenance;
    s << '\n';
  }
  return s.str();
}

DatasetManifest decode_manifest(const std::string& text, const std::string& source) {
  DatasetManifest m;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_tabs(line);
    const std::string where = source + ":" + std::to_string(line_no);
    if (f.size() != 5 && f.size() != 6) throw IoError(where + ": expected 5 or 6 tab-separated fields");
    ManifestRow r;
    r.path = f[0];
    r.genre = f[1];
    r.style = f[2] == "-" ? "" : f[2];
    try {
      r.domain = parse_domain(f[3]);
      r.split = parse_split(f[4]);
    } catch (const InvalidArgument& e) {
      throw IoError(where + ": " + e.what());
    }
    if (f.size() == 6) r.provenance = f[5];
    if (r.path.empty() || r.genre.empty()) throw IoError(where + ": empty path or genre");
    m.rows.push_back(std::move(r));
  }
  try {
    m.validate();
  } catch (const InvalidArgument& e) {
    throw IoError(source + ": " + e.what());
  }
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) { return decode_manifest(read_file(path), path.string()); }

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  write_file_atomic(path, encode_manifest(m));
}

std::filesystem::path resolve_path(const std::filesystem::path& base_dir, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

}  // namespace paintdomain
