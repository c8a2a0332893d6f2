#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <vector>

#include "reflectdepth/io.hpp"

namespace reflectdepth {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

ImageBuffer load_png(const std::string& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("png: cannot open " + path);

  png_byte header[8];
  if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8))
    throw FormatError("png: not a PNG file: " + path);

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png: read struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png: info struct allocation failed");
  }
  std::vector<png_bytep> rows;
  std::vector<png_byte> pixels;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("png: corrupt file: " + path);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  png_uint_32 width = png_get_image_width(png, info);
  png_uint_32 height = png_get_image_height(png, info);
  int bit_depth = png_get_bit_depth(png, info);
  int color_type = png_get_color_type(png, info);

  if (bit_depth == 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("png: 16-bit depth unsupported: " + path);
  }
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("png: unsupported channel count: " + path);
  }

  size_t stride = png_get_rowbytes(png, info);
  pixels.resize(stride * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + y * stride;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  std::vector<double> data(static_cast<size_t>(height) * width * channels);
  for (png_uint_32 y = 0; y < height; ++y)
    for (png_uint_32 x = 0; x < width * static_cast<png_uint_32>(channels); ++x)
      data[static_cast<size_t>(y) * width * channels + x] =
          pixels[y * stride + x] / 255.0;
  return ImageBuffer(static_cast<int>(height), static_cast<int>(width), channels,
                     Domain::Linear, std::move(data));
}

void save_png(const ImageBuffer& img, const std::string& path) {
  if (img.domain != Domain::Linear)
    throw InvalidArgument("png: only linear-domain images are written");
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("png: cannot open for writing " + path);

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png: write struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png: info struct allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png: write failed: " + path);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, img.width, img.height, 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<png_byte> row(static_cast<size_t>(img.width) * img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width * img.channels; ++x) {
      double v = img.data[static_cast<size_t>(y) * img.width * img.channels + x];
      v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
      row[x] = static_cast<png_byte>(std::lround(v * 255.0));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
}

BinaryMask load_mask_png(const std::string& path) {
  ImageBuffer img = load_png(path);
  if (img.channels != 1) throw FormatError("mask png: expected 1 channel");
  std::vector<std::uint8_t> bits(img.size());
  for (size_t i = 0; i < bits.size(); ++i) bits[i] = img.data[i] >= 0.5 ? 1 : 0;
  return BinaryMask(img.height, img.width, std::move(bits));
}

void save_mask_png(const BinaryMask& mask, const std::string& path) {
  std::vector<double> data(mask.values.size());
  for (size_t i = 0; i < data.size(); ++i) data[i] = mask.values[i] ? 1.0 : 0.0;
  save_png(ImageBuffer(mask.height, mask.width, 1, Domain::Linear,
                       std::move(data)),
           path);
}

}  // namespace reflectdepth
