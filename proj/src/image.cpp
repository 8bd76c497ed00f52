#include "vimix/image.hpp"

#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <iostream>
#include <memory>
#include <string>

#include <jpeglib.h>

namespace vimix {

ImageTensor::ImageTensor(std::vector<PlaneU8> planes) : planes_(std::move(planes)) {
  if (planes_.empty()) throw std::invalid_argument("ImageTensor: no channels");
  for (const auto& p : planes_) {
    if (p.rows() != planes_[0].rows() || p.cols() != planes_[0].cols())
      throw std::invalid_argument("ImageTensor: channel dimensions differ");
    if (p.rows() < 1 || p.cols() < 1)
      throw std::invalid_argument("ImageTensor: empty channel");
  }
}

ImageTensor ImageTensor::filled(int channels, int height, int width, std::uint8_t value) {
  std::vector<PlaneU8> planes(channels, PlaneU8::Constant(height, width, value));
  return ImageTensor(std::move(planes));
}

bool ImageTensor::operator==(const ImageTensor& other) const {
  if (!same_shape(other)) return false;
  for (int c = 0; c < channel_count(); ++c)
    if (planes_[c] != other.planes_[c]) return false;
  return true;
}

std::uint64_t ImageTensor::content_digest() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  feed(static_cast<std::uint64_t>(channel_count()));
  feed(static_cast<std::uint64_t>(height()));
  feed(static_cast<std::uint64_t>(width()));
  for (const auto& p : planes_)
    for (Eigen::Index r = 0; r < p.rows(); ++r)
      for (Eigen::Index c = 0; c < p.cols(); ++c) {
        h ^= p(r, c);
        h *= 0x100000001b3ULL;
      }
  return h;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::string lower_ext(const std::filesystem::path& path) {
  std::string e = path.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

ImageTensor planes_from_interleaved(const std::vector<std::uint8_t>& buf, int height,
                                    int width, int in_channels, int keep_channels) {
  std::vector<PlaneU8> planes(keep_channels, PlaneU8(height, width));
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < keep_channels; ++c)
        planes[c](y, x) = buf[(static_cast<std::size_t>(y) * width + x) * in_channels + c];
  return ImageTensor(std::move(planes));
}

ImageTensor load_png(const std::filesystem::path& path, AlphaPolicy alpha) {
  FilePtr f(std::fopen(path.string().c_str(), "rb"));
  if (!f) throw std::runtime_error("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png: allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("png: allocation failed");
  }
  std::vector<std::uint8_t> buf;
  int width = 0, height = 0, channels = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("png: decode error in " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  if (bit_depth == 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("png: unsupported sample depth (16-bit) in " + path.string());
  }
  const int color_type = png_get_color_type(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_read_update_info(png, info);
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  channels = png_get_channels(png, info);
  buf.resize(static_cast<std::size_t>(width) * height * channels);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y)
    rows[y] = buf.data() + static_cast<std::size_t>(y) * width * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  int keep = channels;
  if (channels == 2 || channels == 4) {  // gray+alpha or rgba
    if (alpha == AlphaPolicy::Reject)
      throw std::runtime_error("alpha channel rejected: " + path.string());
    std::cerr << "warning: dropping alpha channel of " << path.string() << "\n";
    keep = channels - 1;
  }
  return planes_from_interleaved(buf, height, width, channels, keep);
}

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_trampoline(j_common_ptr ci) {
  auto* mgr = reinterpret_cast<JpegErrorMgr*>(ci->err);
  (*ci->err->format_message)(ci, mgr->message);
  longjmp(mgr->jump, 1);
}

ImageTensor load_jpeg(const std::filesystem::path& path) {
  FilePtr f(std::fopen(path.string().c_str(), "rb"));
  if (!f) throw std::runtime_error("cannot open " + path.string());
  jpeg_decompress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_trampoline;
  std::vector<std::uint8_t> buf;
  int width = 0, height = 0, channels = 0;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw std::runtime_error("jpeg: " + std::string(jerr.message) + " in " + path.string());
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f.get());
  jpeg_read_header(&cinfo, TRUE);
  jpeg_start_decompress(&cinfo);
  width = static_cast<int>(cinfo.output_width);
  height = static_cast<int>(cinfo.output_height);
  channels = cinfo.output_components;
  if (channels != 1 && channels != 3) {
    jpeg_destroy_decompress(&cinfo);
    throw std::runtime_error("jpeg: unsupported channel count in " + path.string());
  }
  buf.resize(static_cast<std::size_t>(width) * height * channels);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = buf.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * channels;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return planes_from_interleaved(buf, height, width, channels, channels);
}

std::uint32_t read_u32le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t read_u16le(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

// Uncompressed BI_RGB only: 8-bit paletted (must be a gray ramp), 24 or 32 bit.
ImageTensor load_bmp(const std::filesystem::path& path, AlphaPolicy alpha) {
  FilePtr f(std::fopen(path.string().c_str(), "rb"));
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> data;
  {
    std::fseek(f.get(), 0, SEEK_END);
    const long size = std::ftell(f.get());
    std::fseek(f.get(), 0, SEEK_SET);
    data.resize(static_cast<std::size_t>(size));
    if (std::fread(data.data(), 1, data.size(), f.get()) != data.size())
      throw std::runtime_error("bmp: short read on " + path.string());
  }
  if (data.size() < 54 || data[0] != 'B' || data[1] != 'M')
    throw std::runtime_error("bmp: not a BMP file: " + path.string());
  const std::uint32_t pixel_offset = read_u32le(&data[10]);
  const std::uint32_t header_size = read_u32le(&data[14]);
  if (header_size < 40) throw std::runtime_error("bmp: unsupported header in " + path.string());
  const std::int32_t width = static_cast<std::int32_t>(read_u32le(&data[18]));
  const std::int32_t height_raw = static_cast<std::int32_t>(read_u32le(&data[22]));
  const bool bottom_up = height_raw > 0;
  const std::int32_t height = bottom_up ? height_raw : -height_raw;
  const std::uint16_t bpp = read_u16le(&data[28]);
  const std::uint32_t compression = read_u32le(&data[30]);
  if (compression != 0)
    throw std::runtime_error("bmp: compressed BMP unsupported: " + path.string());
  if (width < 1 || height < 1) throw std::runtime_error("bmp: bad dimensions");

  const std::size_t row_stride = (static_cast<std::size_t>(width) * bpp / 8 + 3) & ~3ULL;
  if (pixel_offset + row_stride * height > data.size())
    throw std::runtime_error("bmp: truncated pixel data in " + path.string());

  auto row_ptr = [&](int y) {
    const int src_y = bottom_up ? (height - 1 - y) : y;
    return data.data() + pixel_offset + static_cast<std::size_t>(src_y) * row_stride;
  };

  if (bpp == 8) {
    // palette sits between the info header and the pixels
    const std::uint32_t palette_offset = 14 + header_size;
    std::uint32_t colors = read_u32le(&data[46]);
    if (colors == 0) colors = 256;
    for (std::uint32_t i = 0; i < colors; ++i) {
      const std::uint8_t* e = &data[palette_offset + 4 * i];
      if (!(e[0] == e[1] && e[1] == e[2]))
        throw std::runtime_error("bmp: non-grayscale palette unsupported: " + path.string());
    }
    PlaneU8 plane(height, width);
    for (int y = 0; y < height; ++y) {
      const std::uint8_t* row = row_ptr(y);
      for (int x = 0; x < width; ++x)
        plane(y, x) = data[palette_offset + 4 * row[x]];  // palette is BGRA, gray so any of BGR
    }
    std::vector<PlaneU8> planes;
    planes.push_back(std::move(plane));
    return ImageTensor(std::move(planes));
  }
  if (bpp == 24 || bpp == 32) {
    const int in_c = bpp / 8;
    if (bpp == 32 && alpha == AlphaPolicy::Reject)
      throw std::runtime_error("alpha channel rejected: " + path.string());
    if (bpp == 32) std::cerr << "warning: dropping alpha channel of " << path.string() << "\n";
    std::vector<PlaneU8> planes(3, PlaneU8(height, width));
    for (int y = 0; y < height; ++y) {
      const std::uint8_t* row = row_ptr(y);
      for (int x = 0; x < width; ++x) {
        planes[0](y, x) = row[x * in_c + 2];  // BGR(A) -> RGB
        planes[1](y, x) = row[x * in_c + 1];
        planes[2](y, x) = row[x * in_c + 0];
      }
    }
    return ImageTensor(std::move(planes));
  }
  throw std::runtime_error("bmp: unsupported bit depth in " + path.string());
}

}  // namespace

ImageTensor load_image(const std::filesystem::path& path, AlphaPolicy alpha) {
  if (!std::filesystem::exists(path))
    throw std::runtime_error("no such file: " + path.string());
  const std::string ext = lower_ext(path);
  if (ext == ".png") return load_png(path, alpha);
  if (ext == ".jpg" || ext == ".jpeg") return load_jpeg(path);
  if (ext == ".bmp") return load_bmp(path, alpha);
  throw std::runtime_error("unsupported image format: " + path.string());
}

void save_image(const ImageTensor& t, const std::filesystem::path& path) {
  if (lower_ext(path) != ".png")
    throw std::runtime_error(
        "refusing lossy/unknown format for shuffled output, use .png: " + path.string());
  const int channels = t.channel_count();
  if (channels != 1 && channels != 3)
    throw std::runtime_error("save_image: only 1- or 3-channel tensors supported");
  FilePtr f(std::fopen(path.string().c_str(), "wb"));
  if (!f) throw std::runtime_error("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png: allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png: allocation failed");
  }
  std::vector<std::uint8_t> row(static_cast<std::size_t>(t.width()) * channels);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png: encode error for " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, t.width(), t.height(), 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < t.height(); ++y) {
    for (int x = 0; x < t.width(); ++x)
      for (int c = 0; c < channels; ++c) row[static_cast<std::size_t>(x) * channels + c] = t.plane(c)(y, x);
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::vector<Region> split_regions(int width, int height, int ws) {
  if (ws < 1) throw std::invalid_argument("split_regions: ws must be >= 1");
  std::vector<Region> regions;
  regions.reserve(static_cast<std::size_t>((width + ws - 1) / ws) *
                  ((height + ws - 1) / ws));
  for (int y = 0; y < height; y += ws)
    for (int x = 0; x < width; x += ws)
      regions.push_back({x, y, std::min(ws, width - x), std::min(ws, height - y)});
  return regions;
}

std::vector<Region> split_regions(const ImageTensor& t, int ws) {
  return split_regions(t.width(), t.height(), ws);
}

bool region_fits(const Region& r, int width, int height) {
  return r.x0 >= 0 && r.y0 >= 0 && r.w >= 1 && r.h >= 1 && r.x0 + r.w <= width &&
         r.y0 + r.h <= height;
}

RegionStats region_stats(const ImageTensor& t, const Region& r, int c) {
  return region_stats(t.plane(c), r);
}

PlaneD standardize(const ImageTensor& t, const Region& r, int c) {
  return standardize(t.plane(c), r);
}

}  // namespace vimix
