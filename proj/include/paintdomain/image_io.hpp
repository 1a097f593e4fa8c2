#pragma once

#include <filesystem>
#include <string>

#include "paintdomain/image.hpp"
#include "paintdomain/pyramid.hpp"

namespace paintdomain {

/// Decodes an 8-bit PNG or JPEG (detected from the file signature) into a
/// 1- or 3-channel image scaled by 1/255. Alpha is dropped.
Image load_image(const std::filesystem::path& path);

/// Quantizes with clamping to [0,1] and round-half-up: q = floor(255 v + 0.5).
std::string encode_png(const Image& img);
void save_png(const Image& img, const std::filesystem::path& path);

unsigned char quantize_u8(double v);

/// Pyramid container: "PDPYR1\0\0", u32 level count, then each band
/// (finest first) followed by the residual, each as u32 width, height,
/// channels and f64 samples. Little-endian throughout.
std::string encode_pyramid(const LaplacianPyramid& pyr);
LaplacianPyramid decode_pyramid(std::string bytes, const std::string& source = "pyramid");
void save_pyramid(const LaplacianPyramid& pyr, const std::filesystem::path& path);
LaplacianPyramid load_pyramid(const std::filesystem::path& path);

}  // namespace paintdomain
