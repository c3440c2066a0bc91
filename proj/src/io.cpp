// Copyright 2026 The nfps Authors
// SPDX-License-Identifier: Apache-2.0

#include "nfps/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <csetjmp>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

namespace nfps {

namespace {

namespace fs = std::filesystem;

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw std::runtime_error("cannot open " + path);
  return f;
}

struct PngError {
  char message[256] = "unknown error";
};

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
  auto* err = static_cast<PngError*>(png_get_error_ptr(png));
  std::snprintf(err->message, sizeof err->message, "%s", msg);
  png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

// Decoded PNG as 16-bit samples, 3 channels.
struct RawPng {
  int width = 0, height = 0, max_code = 65535;
  std::vector<std::uint16_t> rgb;
};

RawPng decode_png(const std::string& path) {
  FilePtr f = open_file(path, "rb");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8)) throw std::runtime_error(path + ": not a PNG file");

  PngError err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_fail, png_warn);
  if (!png) throw std::runtime_error("png: out of memory");
  png_infop info = png_create_info_struct(png);
  RawPng out;
  std::vector<png_byte> buf;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error(path + ": " + err.message);
  }
  {
    png_init_io(png, f.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const int depth = png_get_bit_depth(png, info);
    const int type = png_get_color_type(png, info);
    if (type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (type == PNG_COLOR_TYPE_GRAY || type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    if (type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
    png_read_update_info(png, info);

    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    const bool wide = png_get_bit_depth(png, info) == 16;
    out.max_code = wide ? 65535 : 255;
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    buf.resize(rowbytes * out.height);
    rows.resize(out.height);
    for (int y = 0; y < out.height; ++y) rows[y] = buf.data() + rowbytes * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);

    out.rgb.resize(static_cast<std::size_t>(out.width) * out.height * 3);
    for (int y = 0; y < out.height; ++y)
      for (int i = 0; i < out.width * 3; ++i) {
        const std::size_t k = static_cast<std::size_t>(y) * out.width * 3 + i;
        if (wide) {
          std::uint16_t v;
          std::memcpy(&v, rows[y] + 2 * i, 2);
          out.rgb[k] = v;
        } else {
          out.rgb[k] = rows[y][i];
        }
      }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void encode_png(const std::string& path, int width, int height, int channels, int depth, const std::vector<png_byte>& bytes) {
  FilePtr f = open_file(path, "wb");
  PngError err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_fail, png_warn);
  if (!png) throw std::runtime_error("png: out of memory");
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error(path + ": " + err.message);
  }
  {
    png_init_io(png, f.get());
    png_set_IHDR(png, info, width, height, depth, channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t rowbytes = static_cast<std::size_t>(width) * channels * depth / 8;
    for (int y = 0; y < height; ++y) png_write_row(png, bytes.data() + rowbytes * y);
    png_write_end(png, nullptr);
  }
  png_destroy_write_struct(&png, &info);
}

bool is_big_endian() { return std::endian::native == std::endian::big; }

template <class T>
T byteswap_value(T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace

Image read_png(const std::string& path) {
  const RawPng raw = decode_png(path);
  Image img(raw.width, raw.height);
  const double inv = 1.0 / raw.max_code;
  for (std::size_t i = 0; i < img.size(); ++i)
    img.data[i] = Rgb(raw.rgb[3 * i], raw.rgb[3 * i + 1], raw.rgb[3 * i + 2]) * inv;
  return img;
}

void write_png16(const std::string& path, const Image& img) {
  std::vector<png_byte> bytes(img.size() * 6);
  for (std::size_t i = 0; i < img.size(); ++i)
    for (int c = 0; c < 3; ++c) {
      const double v = std::clamp(img.data[i][c], 0.0, 1.0);
      const auto code = static_cast<std::uint16_t>(std::lround(v * 65535.0));
      bytes[6 * i + 2 * c] = static_cast<png_byte>(code >> 8);
      bytes[6 * i + 2 * c + 1] = static_cast<png_byte>(code & 0xff);
    }
  encode_png(path, img.width, img.height, 3, 16, bytes);
}

void write_png8(const std::string& path, const Image& img) {
  std::vector<png_byte> bytes(img.size() * 3);
  for (std::size_t i = 0; i < img.size(); ++i)
    for (int c = 0; c < 3; ++c)
      bytes[3 * i + c] = static_cast<png_byte>(std::lround(std::clamp(img.data[i][c], 0.0, 1.0) * 255.0));
  encode_png(path, img.width, img.height, 3, 8, bytes);
}

Mask read_mask_png(const std::string& path) {
  const RawPng raw = decode_png(path);
  Mask m(raw.width, raw.height, 0);
  for (std::size_t i = 0; i < m.size(); ++i)
    m.data[i] = (raw.rgb[3 * i] | raw.rgb[3 * i + 1] | raw.rgb[3 * i + 2]) ? 1 : 0;
  return m;
}

void write_mask_png(const std::string& path, const Mask& mask) {
  std::vector<png_byte> bytes(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) bytes[i] = mask.data[i] ? 255 : 0;
  encode_png(path, mask.width, mask.height, 1, 8, bytes);
}

FloatMap read_pfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string magic;
  FloatMap m;
  double scale = 0.0;
  in >> magic >> m.width >> m.height >> scale;
  if (!in || (magic != "PF" && magic != "Pf")) throw std::runtime_error(path + ": malformed PFM header");
  if (m.width <= 0 || m.height <= 0 || scale == 0.0 || !std::isfinite(scale))
    throw std::runtime_error(path + ": malformed PFM header");
  in.get();  // single whitespace before the raster
  m.channels = magic == "PF" ? 3 : 1;
  const bool file_little = scale < 0.0;
  const std::size_t row = static_cast<std::size_t>(m.width) * m.channels;
  m.data.resize(row * m.height);
  std::vector<float> buf(row);
  for (int r = 0; r < m.height; ++r) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(row * sizeof(float)));
    if (!in) throw std::runtime_error(path + ": truncated PFM raster");
    if (file_little == is_big_endian())
      for (auto& v : buf) v = byteswap_value(v);
    std::copy(buf.begin(), buf.end(), m.data.begin() + static_cast<std::ptrdiff_t>((m.height - 1 - r) * row));
  }
  return m;
}

void write_pfm(const std::string& path, const FloatMap& map) {
  if (map.channels != 1 && map.channels != 3) throw std::invalid_argument("write_pfm: 1 or 3 channels required");
  if (map.data.size() != static_cast<std::size_t>(map.width) * map.height * map.channels)
    throw std::invalid_argument("write_pfm: data size does not match dimensions");
  for (float v : map.data)
    if (!std::isfinite(v)) throw std::invalid_argument("write_pfm: non-finite value");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << (map.channels == 3 ? "PF" : "Pf") << '\n' << map.width << ' ' << map.height << '\n' << (is_big_endian() ? "1.0" : "-1.0") << '\n';
  const std::size_t row = static_cast<std::size_t>(map.width) * map.channels;
  for (int r = map.height - 1; r >= 0; --r)
    out.write(reinterpret_cast<const char*>(map.data.data() + r * row), static_cast<std::streamsize>(row * sizeof(float)));
  if (!out) throw std::runtime_error("write failed: " + path);
}

FloatMap depth_to_map(const DepthMap& depth) {
  FloatMap m{depth.width(), depth.height(), 1, std::vector<float>(depth.values.size(), 0.0f)};
  for (std::size_t i = 0; i < m.data.size(); ++i)
    if (depth.mask.data[i]) m.data[i] = static_cast<float>(depth.values.data[i]);
  return m;
}

DepthMap depth_from_map(const FloatMap& map) {
  if (map.channels != 1) throw std::invalid_argument("depth map must have one channel");
  DepthMap d{Grid<double>(map.width, map.height, 0.0), Mask(map.width, map.height, 0)};
  for (std::size_t i = 0; i < map.data.size(); ++i)
    if (map.data[i] > 0.0f) {
      d.values.data[i] = map.data[i];
      d.mask.data[i] = 1;
    }
  return d;
}

FloatMap normals_to_map(const NormalMap& normals) {
  FloatMap m{normals.width(), normals.height(), 3, std::vector<float>(normals.values.size() * 3, 0.0f)};
  for (std::size_t i = 0; i < normals.values.size(); ++i)
    if (normals.mask.data[i])
      for (int c = 0; c < 3; ++c) m.data[3 * i + c] = static_cast<float>(normals.values.data[i][c]);
  return m;
}

NormalMap normals_from_map(const FloatMap& map) {
  if (map.channels != 3) throw std::invalid_argument("normal map must have three channels");
  NormalMap n{Grid<Vec3>(map.width, map.height, Vec3::Zero()), Mask(map.width, map.height, 0)};
  for (std::size_t i = 0; i < n.values.size(); ++i) {
    const Vec3 v(map.data[3 * i], map.data[3 * i + 1], map.data[3 * i + 2]);
    if (v.squaredNorm() > 0.0) {
      n.values.data[i] = v;
      n.mask.data[i] = 1;
    }
  }
  return n;
}

void Dataset::validate() const {
  calib.validate();
  if (images.size() != calib.lights.size())
    throw std::invalid_argument("dataset: " + std::to_string(images.size()) + " images but " + std::to_string(calib.lights.size()) +
                                " calibrated lights");
  const int W = mask.width, H = mask.height;
  if (calib.camera.width != W || calib.camera.height != H) throw std::invalid_argument("dataset: camera size differs from the mask");
  for (std::size_t i = 0; i < images.size(); ++i)
    if (!images[i].same_shape(W, H)) throw std::invalid_argument("dataset: " + light_image_name(i) + " differs in size from the mask");
  if (gt_depth && !gt_depth->values.same_shape(W, H)) throw std::invalid_argument("dataset: gt depth differs in size from the mask");
  if (gt_normals && !gt_normals->values.same_shape(W, H)) throw std::invalid_argument("dataset: gt normals differ in size from the mask");
}

std::string light_image_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "light_%03zu.png", index);
  return buf;
}

Dataset load_dataset(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw std::runtime_error("dataset: not a directory: " + dir);
  Dataset d;
  d.calib = read_calibration((root / "calib.txt").string());
  d.mask = read_mask_png((root / "mask.png").string());
  const std::size_t n = d.calib.lights.size();
  for (std::size_t i = 0; i < n; ++i)
    if (!fs::exists(root / light_image_name(i)))
      throw std::runtime_error("dataset: missing image for light " + std::to_string(i) + " (" + light_image_name(i) + ")");
  if (fs::exists(root / light_image_name(n)))
    throw std::runtime_error("dataset: more images than calibrated lights (found " + light_image_name(n) + ")");
  d.images.resize(n);
  std::vector<std::string> errors(n);
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) try {
        d.images[i] = read_png((root / light_image_name(i)).string());
      } catch (const std::exception& ex) {
        errors[i] = ex.what();
      }
  });
  for (const auto& err : errors)
    if (!err.empty()) throw std::runtime_error("dataset: " + err);
  if (fs::exists(root / "gt_depth.pfm")) d.gt_depth = depth_from_map(read_pfm((root / "gt_depth.pfm").string()));
  if (fs::exists(root / "gt_normals.pfm")) d.gt_normals = normals_from_map(read_pfm((root / "gt_normals.pfm").string()));
  d.validate();
  return d;
}

void save_dataset(const std::string& dir, const Dataset& data) {
  data.validate();
  const fs::path root(dir);
  fs::create_directories(root);
  write_calibration((root / "calib.txt").string(), data.calib);
  write_mask_png((root / "mask.png").string(), data.mask);
  for (std::size_t i = 0; i < data.images.size(); ++i) write_png16((root / light_image_name(i)).string(), data.images[i]);
  if (data.gt_depth) write_pfm((root / "gt_depth.pfm").string(), depth_to_map(*data.gt_depth));
  if (data.gt_normals) write_pfm((root / "gt_normals.pfm").string(), normals_to_map(*data.gt_normals));
}

std::string libpng_version() { return PNG_LIBPNG_VER_STRING; }

std::string eigen_version() {
  return std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
         std::to_string(EIGEN_MINOR_VERSION);
}

}  // namespace nfps
