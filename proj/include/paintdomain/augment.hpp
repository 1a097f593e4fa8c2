#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "paintdomain/image.hpp"
#include "paintdomain/manifest.hpp"

namespace paintdomain {

struct AugmentOp {
  enum class Kind { hflip, rotate };
  Kind kind = Kind::hflip;
  /// One of +-3, +-6, +-9, +-12 for rotations.
  int degrees = 0;

  /// "hflip", "rot3", "rot-12", ...
  static AugmentOp parse(const std::string& token);
  std::string name() const;
  friend bool operator==(const AugmentOp&, const AugmentOp&) = default;
};

/// Comma-separated op list; an empty string yields no ops.
std::vector<AugmentOp> parse_augment_ops(const std::string& list);

Image hflip(const Image& img);

/// Rotation about the image center by `degrees` (positive is counterclockwise
/// on screen), bilinear sampling with mirrored borders. |degrees| <= 15.
Image rotate(const Image& img, double degrees);

Image apply_op(const Image& img, const AugmentOp& op);

struct AugmentResult {
  DatasetManifest manifest;
  /// One message per source file that could not be read or written.
  std::vector<std::string> errors;
};

/// Augments every training row with every op, writing PNGs into `out_dir`
/// and appending rows that inherit genre, style and domain and carry an
/// "op:source" provenance tag. Relative row paths resolve against `base_dir`.
AugmentResult augment_manifest(const DatasetManifest& manifest, const std::vector<AugmentOp>& ops,
                               const std::filesystem::path& out_dir, const std::filesystem::path& base_dir = {},
                               int threads = 1);

}  // namespace paintdomain
