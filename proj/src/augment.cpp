#include "paintdomain/augment.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>

#include "paintdomain/image_io.hpp"
#include "paintdomain/parallel.hpp"

namespace paintdomain {

namespace {

bool allowed_rotation(int deg) {
  const int a = std::abs(deg);
  return a == 3 || a == 6 || a == 9 || a == 12;
}

double sample_bilinear(const Image& img, int c, double sx, double sy) {
  const int w = img.width();
  const int h = img.height();
  const double fx = std::floor(sx);
  const double fy = std::floor(sy);
  const double ax = sx - fx;
  const double ay = sy - fy;
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const int xa = reflect_index(x0, w), xb = reflect_index(x0 + 1, w);
  const int ya = reflect_index(y0, h), yb = reflect_index(y0 + 1, h);
  const double top = img.at(c, ya, xa) * (1.0 - ax) + img.at(c, ya, xb) * ax;
  const double bottom = img.at(c, yb, xa) * (1.0 - ax) + img.at(c, yb, xb) * ax;
  return top * (1.0 - ay) + bottom * ay;
}

}  // namespace

AugmentOp AugmentOp::parse(const std::string& token) {
  if (token == "hflip") return {Kind::hflip, 0};
  if (token.starts_with("rot")) {
    int deg = 0;
    const char* first = token.data() + 3;
    const char* last = token.data() + token.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, deg);
    if (ec == std::errc{} && ptr == last && allowed_rotation(deg)) return {Kind::rotate, deg};
  }
  throw InvalidArgument("unknown augmentation '" + token + "' (expected hflip or rot{+-}{3,6,9,12})");
}

std::string AugmentOp::name() const {
  if (kind == Kind::hflip) return "hflip";
  return "rot" + std::to_string(degrees);
}

std::vector<AugmentOp> parse_augment_ops(const std::string& list) {
  std::vector<AugmentOp> ops;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = list.find(',', start);
    const std::string tok = list.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!tok.empty()) ops.push_back(AugmentOp::parse(tok));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return ops;
}

Image hflip(const Image& img) {
  Image out(img.width(), img.height(), img.channels());
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) out.at(c, y, img.width() - 1 - x) = img.at(c, y, x);
  return out;
}

Image rotate(const Image& img, double degrees) {
  if (!(std::abs(degrees) <= 15.0)) throw InvalidArgument("rotate: |degrees| must be at most 15");
  if (degrees == 0.0) return img;
  const double theta = degrees * 3.14159265358979323846 / 180.0;
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  const double cx = (img.width() - 1) / 2.0;
  const double cy = (img.height() - 1) / 2.0;
  Image out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      const double sx = cx + dx * cs - dy * sn;
      const double sy = cy + dx * sn + dy * cs;
      for (int c = 0; c < img.channels(); ++c) out.at(c, y, x) = sample_bilinear(img, c, sx, sy);
    }
  }
  return out;
}

Image apply_op(const Image& img, const AugmentOp& op) {
  if (op.kind == AugmentOp::Kind::hflip) return hflip(img);
  if (!allowed_rotation(op.degrees)) throw InvalidArgument("rotation must be one of +-3, +-6, +-9, +-12 degrees");
  return rotate(img, op.degrees);
}

AugmentResult augment_manifest(const DatasetManifest& manifest, const std::vector<AugmentOp>& ops,
                               const std::filesystem::path& out_dir, const std::filesystem::path& base_dir,
                               int threads) {
  AugmentResult result;
  result.manifest = manifest;
  if (ops.empty()) return result;

  std::vector<std::size_t> train_rows;
  for (std::size_t i = 0; i < manifest.rows.size(); ++i)
    if (manifest.rows[i].split == Split::train) train_rows.push_back(i);

  struct Outcome {
    std::vector<std::optional<ManifestRow>> rows;
    std::string error;
  };
  std::vector<Outcome> outcomes(train_rows.size());
  parallel_for(train_rows.size(), threads, [&](std::size_t k) {
    const std::size_t idx = train_rows[k];
    const ManifestRow& src = manifest.rows[idx];
    Outcome& o = outcomes[k];
    o.rows.resize(ops.size());
    try {
      const Image img = load_image(resolve_path(base_dir, src.path));
      const std::string stem = std::filesystem::path(src.path).stem().string();
      char prefix[32];
      std::snprintf(prefix, sizeof prefix, "r%06zu_", idx);
      for (std::size_t j = 0; j < ops.size(); ++j) {
        const std::filesystem::path out = out_dir / (prefix + stem + "__" + ops[j].name() + ".png");
        save_png(apply_op(img, ops[j]), out);
        ManifestRow row = src;
        row.path = out.string();
        row.split = Split::train;
        row.provenance = ops[j].name() + ":" + src.path;
        o.rows[j] = std::move(row);
      }
    } catch (const std::exception& e) {
      o.error = src.path + ": " + e.what();
    }
  });

  for (auto& o : outcomes) {
    if (!o.error.empty()) result.errors.push_back(o.error);
    for (auto& r : o.rows)
      if (r) result.manifest.rows.push_back(std::move(*r));
  }
  return result;
}

}  // namespace paintdomain
