#include "cxrnet/image.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

// jpeglib.h expects FILE and size_t to be declared first.
#include <jpeglib.h>

namespace cxrnet {
namespace {

struct Raster {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;  // 1 or 3
  std::vector<std::uint8_t> pixels;
};

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// ---- PNG -------------------------------------------------------------------

struct PngErrorSink {
  char message[256] = {0};
};

void png_error_to_sink(png_structp png, png_const_charp msg) {
  auto* sink = static_cast<PngErrorSink*>(png_get_error_ptr(png));
  std::snprintf(sink->message, sizeof sink->message, "%s", msg);
  png_longjmp(png, 1);
}

void png_ignore_warning(png_structp, png_const_charp) {}

// Returns an empty string on success, otherwise the libpng message.
// No object with a destructor is created after setjmp.
std::string decode_png(std::FILE* file, Raster& out) {
  PngErrorSink sink;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &sink,
                                           png_error_to_sink, png_ignore_warning);
  if (!png) return "cannot allocate PNG reader";
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return "cannot allocate PNG info";
  }
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return sink.message[0] ? sink.message : "PNG decode failure";
  }
  png_init_io(png, file);
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  out.width = png_get_image_width(png, info);
  out.height = png_get_image_height(png, info);
  out.channels = png_get_channels(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  if (out.channels != 1 && out.channels != 3) {
    png_error(png, "unsupported channel layout");
  }
  out.pixels.resize(row_bytes * out.height);
  rows.resize(out.height);
  for (std::size_t y = 0; y < out.height; ++y) {
    rows[y] = out.pixels.data() + y * row_bytes;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return {};
}

// ---- JPEG ------------------------------------------------------------------

struct JpegError {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

void jpeg_silence(j_common_ptr, int) {}

std::string decode_jpeg(std::FILE* file, Raster& out) {
  jpeg_decompress_struct cinfo;
  JpegError err;
  err.message[0] = 0;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.base.emit_message = jpeg_silence;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    return err.message[0] ? err.message : "JPEG decode failure";
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space =
      cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out.width = cinfo.output_width;
  out.height = cinfo.output_height;
  out.channels = static_cast<std::size_t>(cinfo.output_components);
  const std::size_t stride = out.width * out.channels;
  out.pixels.resize(stride * out.height);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.pixels.data() + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return {};
}

}  // namespace

int luminance(int red, int green, int blue) noexcept {
  return static_cast<int>(std::lround(0.299 * red + 0.587 * green + 0.114 * blue));
}

Image load_grayscale(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw DecodeError("cannot open image " + path.string());

  std::array<unsigned char, 8> magic{};
  const std::size_t got = std::fread(magic.data(), 1, magic.size(), file.get());
  std::rewind(file.get());

  Raster raster;
  std::string failure;
  if (got == 8 && png_sig_cmp(magic.data(), 0, 8) == 0) {
    failure = decode_png(file.get(), raster);
  } else if (got >= 3 && magic[0] == 0xFF && magic[1] == 0xD8 && magic[2] == 0xFF) {
    failure = decode_jpeg(file.get(), raster);
  } else {
    failure = "not a PNG or JPEG file";
  }
  if (!failure.empty()) {
    throw DecodeError("cannot decode " + path.string() + ": " + failure);
  }
  if (raster.width == 0 || raster.height == 0) {
    throw DecodeError("image " + path.string() + " has no pixels");
  }

  Image image({raster.height, raster.width});
  const std::size_t n = raster.width * raster.height;
  if (raster.channels == 1) {
    for (std::size_t i = 0; i < n; ++i) image[i] = raster.pixels[i];
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint8_t* px = raster.pixels.data() + 3 * i;
      image[i] = static_cast<float>(luminance(px[0], px[1], px[2]));
    }
  }
  return image;
}

void save_png(const std::filesystem::path& path, const Image& image) {
  if (image.rank() != 2) throw ShapeError("save_png expects an [H,W] image");
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  desc.width = static_cast<png_uint_32>(image.dim(1));
  desc.height = static_cast<png_uint_32>(image.dim(0));
  desc.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> bytes(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    bytes[i] = static_cast<std::uint8_t>(
        std::clamp(std::lround(image[i]), 0L, 255L));
  }
  if (!png_image_write_to_file(&desc, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    std::string reason = desc.message;
    png_image_free(&desc);
    throw DecodeError("cannot write " + path.string() + ": " + reason);
  }
}

Image resize_bilinear(const Image& image, std::size_t height, std::size_t width) {
  if (image.rank() != 2) throw ShapeError("resize_bilinear expects an [H,W] image");
  if (height == 0 || width == 0) throw ShapeError("resize target must be >= 1");
  const std::size_t in_h = image.dim(0), in_w = image.dim(1);
  if (in_h == height && in_w == width) return image;

  const double scale_y = static_cast<double>(in_h) / static_cast<double>(height);
  const double scale_x = static_cast<double>(in_w) / static_cast<double>(width);

  // Per-column source taps are shared by every row.
  std::vector<std::size_t> x0(width), x1(width);
  std::vector<double> fx(width);
  for (std::size_t x = 0; x < width; ++x) {
    const double sx = std::clamp((x + 0.5) * scale_x - 0.5, 0.0,
                                 static_cast<double>(in_w - 1));
    x0[x] = static_cast<std::size_t>(sx);
    x1[x] = std::min(x0[x] + 1, in_w - 1);
    fx[x] = sx - static_cast<double>(x0[x]);
  }

  Image out({height, width});
  for (std::size_t y = 0; y < height; ++y) {
    const double sy = std::clamp((y + 0.5) * scale_y - 0.5, 0.0,
                                 static_cast<double>(in_h - 1));
    const std::size_t y0 = static_cast<std::size_t>(sy);
    const std::size_t y1 = std::min(y0 + 1, in_h - 1);
    const double fy = sy - static_cast<double>(y0);
    const float* r0 = image.raw() + y0 * in_w;
    const float* r1 = image.raw() + y1 * in_w;
    for (std::size_t x = 0; x < width; ++x) {
      const double top = r0[x0[x]] + (r0[x1[x]] - r0[x0[x]]) * fx[x];
      const double bottom = r1[x0[x]] + (r1[x1[x]] - r1[x0[x]]) * fx[x];
      out.at(y, x) = static_cast<float>(top + (bottom - top) * fy);
    }
  }
  return out;
}

Image normalize(const Image& image) {
  Image out = image;
  for (float& v : out.data()) {
    if (!(v >= 0.0f && v <= 255.0f)) {
      throw InputError("normalize: intensity " + std::to_string(v) +
                       " outside [0, 255]");
    }
    v /= 255.0f;
  }
  return out;
}

Image preprocess(const std::filesystem::path& path, std::size_t size) {
  return normalize(resize_bilinear(load_grayscale(path), size, size));
}

}  // namespace cxrnet
