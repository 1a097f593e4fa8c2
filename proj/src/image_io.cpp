#include "paintdomain/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <vector>

// jpeglib.h expects size_t and FILE to be declared first.
#include <jpeglib.h>

#include "paintdomain/binary_io.hpp"

namespace paintdomain {

namespace {

constexpr std::string_view kPyramidMagic{"PDPYR1\0\0", 8};

Image from_interleaved(const unsigned char* px, int w, int h, int src_channels, int channels) {
  Image img(w, h, channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const unsigned char* p =
          px + (static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)) *
                   static_cast<std::size_t>(src_channels);
      for (int c = 0; c < channels; ++c) img.at(c, y, x) = p[c] / 255.0;
    }
  }
  return img;
}

Image decode_png(const std::string& bytes, const std::string& source) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw IoError(source + ": " + image.message);
  }
  const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw IoError(source + ": " + msg);
  }
  const int ch = gray ? 1 : 3;
  return from_interleaved(buf.data(), static_cast<int>(image.width),
                          static_cast<int>(image.height), ch, ch);
}

struct JpegErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

Image decode_jpeg(const std::string& bytes, const std::string& source) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  std::vector<unsigned char> pixels;
  int w = 0, h = 0, ch = 0;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw IoError(source + ": " + jerr.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, reinterpret_cast<const unsigned char*>(bytes.data()),
               static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  w = static_cast<int>(cinfo.output_width);
  h = static_cast<int>(cinfo.output_height);
  ch = cinfo.output_components;
  pixels.resize(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * static_cast<std::size_t>(ch));
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) *
                                       static_cast<std::size_t>(w) * static_cast<std::size_t>(ch);
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return from_interleaved(pixels.data(), w, h, ch, ch == 1 ? 1 : 3);
}

void put_image(ByteWriter& w, const Image& img) {
  w.u32(static_cast<std::uint32_t>(img.width()));
  w.u32(static_cast<std::uint32_t>(img.height()));
  w.u32(static_cast<std::uint32_t>(img.channels()));
  w.f64s(img.data());
}

Image get_image(ByteReader& r) {
  const auto w = static_cast<int>(r.u32());
  const auto h = static_cast<int>(r.u32());
  const auto c = static_cast<int>(r.u32());
  if (w < 1 || h < 1 || (c != 1 && c != 3)) throw IoError("pyramid: malformed level header");
  auto data = r.f64s(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * static_cast<std::size_t>(c));
  return Image(w, h, c, std::move(data));
}

}  // namespace

unsigned char quantize_u8(double v) {
  const double q = std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
  return static_cast<unsigned char>(q);
}

Image load_image(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const std::string source = path.string();
  if (bytes.size() >= 8 && png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) == 0) {
    return decode_png(bytes, source);
  }
  if (bytes.size() >= 3 && static_cast<unsigned char>(bytes[0]) == 0xFF &&
      static_cast<unsigned char>(bytes[1]) == 0xD8) {
    return decode_jpeg(bytes, source);
  }
  throw IoError(source + ": not a PNG or JPEG file");
}

std::string encode_png(const Image& img) {
  if (img.empty()) throw InvalidArgument("encode_png: empty image");
  const int w = img.width();
  const int h = img.height();
  const int ch = img.channels();
  std::vector<unsigned char> px(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) *
                                static_cast<std::size_t>(ch));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c)
        px[(static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(ch) +
           static_cast<std::size_t>(c)] = quantize_u8(img.at(c, y, x));

  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = ch == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, px.data(), 0, nullptr)) {
    throw IoError(std::string("png encode: ") + image.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, px.data(), 0, nullptr)) {
    throw IoError(std::string("png encode: ") + image.message);
  }
  out.resize(size);
  return out;
}

void save_png(const Image& img, const std::filesystem::path& path) {
  write_file_atomic(path, encode_png(img));
}

std::string encode_pyramid(const LaplacianPyramid& pyr) {
  ByteWriter w;
  w.bytes(kPyramidMagic);
  w.u32(static_cast<std::uint32_t>(pyr.levels()));
  for (const Image& b : pyr.bands) put_image(w, b);
  put_image(w, pyr.residual);
  return w.buffer();
}

LaplacianPyramid decode_pyramid(std::string bytes, const std::string& source) {
  ByteReader r(std::move(bytes), source);
  r.expect_magic(kPyramidMagic);
  const std::uint32_t levels = r.u32();
  if (levels < 2 || levels > 64) throw IoError(source + ": implausible level count");
  LaplacianPyramid pyr;
  for (std::uint32_t k = 0; k + 1 < levels; ++k) pyr.bands.push_back(get_image(r));
  pyr.residual = get_image(r);
  if (!r.at_end()) throw IoError(source + ": trailing bytes after pyramid");
  return pyr;
}

void save_pyramid(const LaplacianPyramid& pyr, const std::filesystem::path& path) {
  write_file_atomic(path, encode_pyramid(pyr));
}

LaplacianPyramid load_pyramid(const std::filesystem::path& path) {
  return decode_pyramid(read_file(path), path.string());
}

}  // namespace paintdomain
