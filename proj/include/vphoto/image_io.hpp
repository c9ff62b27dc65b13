#pragma once

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "vphoto/errors.hpp"
#include "vphoto/image.hpp"

namespace vphoto {

inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(clamp01(v) * 255.0));
}

inline RasterImage read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot decode PNG " + path.string() + ": " + msg);
  }
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  std::vector<double> px(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) px[i] = buf[i] / 255.0;
  return RasterImage::from_interleaved(w, h, std::move(px));
}

inline void write_png(const std::filesystem::path& path, const RasterImage& img) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(img.data().size());
  auto d = img.data();
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = to_byte(d[i]);
  if (!png_image_write_to_file(&image, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + image.message);
  }
}

namespace detail {

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

}  // namespace detail

inline RasterImage read_jpeg(const std::filesystem::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!file) throw IoError("cannot open JPEG " + path.string());

  jpeg_decompress_struct cinfo;
  detail::JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = detail::jpeg_error_exit;
  std::vector<std::uint8_t> buf;
  int w = 0;
  int h = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw IoError("cannot decode JPEG " + path.string() + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  w = static_cast<int>(cinfo.output_width);
  h = static_cast<int>(cinfo.output_height);
  buf.resize(static_cast<std::size_t>(w) * h * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = buf.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);

  std::vector<double> px(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) px[i] = buf[i] / 255.0;
  return RasterImage::from_interleaved(w, h, std::move(px));
}

/// Dispatches on file signature: PNG or JPEG.
inline RasterImage read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  unsigned char sig[4] = {0, 0, 0, 0};
  in.read(reinterpret_cast<char*>(sig), 4);
  if (sig[0] == 0x89 && sig[1] == 'P' && sig[2] == 'N' && sig[3] == 'G') return read_png(path);
  if (sig[0] == 0xFF && sig[1] == 0xD8) return read_jpeg(path);
  throw IoError("unsupported image format: " + path.string());
}

}  // namespace vphoto
