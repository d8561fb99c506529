#include "toothlift/image_io.hpp"

#include <png.h>

#include <nlohmann/json.hpp>

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include "toothlift/error.hpp"

namespace toothlift {
namespace fs = std::filesystem;
namespace {

static_assert(std::endian::native == std::endian::little,
              "raw buffers are written in host order and must be little-endian");

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) {
    throw IoError(std::string("cannot ") + (mode[0] == 'r' ? "open " : "write ") +
                  path.string());
  }
  return f;
}

void png_error_fn(png_structp, png_const_charp msg) { throw FormatError(msg); }
void png_warning_fn(png_structp, png_const_charp) {}

void write_png_rows(const fs::path& path, int width, int height, int color_type,
                    const std::vector<std::uint8_t>& pixels) {
  auto file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn,
                                            png_warning_fn);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};
  if (!info) throw IoError("png_create_info_struct failed");

  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const int stride = width * (color_type == PNG_COLOR_TYPE_RGB ? 3 : 1);
  for (int r = 0; r < height; ++r) {
    png_write_row(png, pixels.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(stride));
  }
  png_write_end(png, nullptr);
}

template <typename Fn>
void with_png_reader(const fs::path& path, Fn&& fn) {
  auto file = open_file(path, "rb");
  std::uint8_t sig[8] = {};
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError(path.string() + ": not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn,
                                           png_warning_fn);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};
  if (!info) throw IoError("png_create_info_struct failed");
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  try {
    png_read_info(png, info);
    fn(png, info);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace

void write_png(const fs::path& path, const Image<std::uint8_t>& gray) {
  std::vector<std::uint8_t> pixels(gray.data(), gray.data() + gray.size());
  write_png_rows(path, static_cast<int>(gray.cols()), static_cast<int>(gray.rows()),
                 PNG_COLOR_TYPE_GRAY, pixels);
}

void write_png(const fs::path& path, const std::array<Image<float>, 3>& rgb) {
  const auto h = rgb[0].rows(), w = rgb[0].cols();
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(h * w * 3));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      for (const auto& plane : rgb) {
        const float x = std::clamp(plane(r, c), 0.0f, 1.0f);
        pixels[k++] = static_cast<std::uint8_t>(std::lround(x * 255.0f));
      }
    }
  }
  write_png_rows(path, static_cast<int>(w), static_cast<int>(h), PNG_COLOR_TYPE_RGB, pixels);
}

PngInfo read_png_info(const fs::path& path) {
  PngInfo out;
  with_png_reader(path, [&](png_structp png, png_infop info) {
    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = png_get_channels(png, info);
  });
  return out;
}

Image<std::uint8_t> read_png_gray(const fs::path& path) {
  Image<std::uint8_t> img;
  with_png_reader(path, [&](png_structp png, png_infop info) {
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    if (png_get_bit_depth(png, info) != 8 || png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY) {
      throw FormatError("expected an 8-bit grayscale PNG");
    }
    img.resize(h, w);
    for (int r = 0; r < h; ++r) png_read_row(png, img.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(w), nullptr);
    png_read_end(png, nullptr);
  });
  return img;
}

template <typename T>
std::string dtype_name() {
  if constexpr (std::is_same_v<T, std::int32_t>) return "int32";
  else if constexpr (std::is_same_v<T, std::uint32_t>) return "uint32";
  else if constexpr (std::is_same_v<T, float>) return "float32";
  else {
    static_assert(std::is_same_v<T, double>, "unsupported raw dtype");
    return "float64";
  }
}

template <typename T>
void write_raw(const fs::path& stem, const RawBuffer<T>& buffer) {
  const auto expected = static_cast<std::size_t>(buffer.width) *
                        static_cast<std::size_t>(buffer.height) *
                        static_cast<std::size_t>(buffer.channels);
  if (buffer.data.size() != expected) throw ArgumentError("raw buffer size mismatch");
  fs::path raw = stem, meta = stem;
  raw += ".raw";
  meta += ".json";
  {
    std::ofstream out(raw, std::ios::binary);
    if (!out) throw IoError("cannot write " + raw.string());
    out.write(reinterpret_cast<const char*>(buffer.data.data()),
              static_cast<std::streamsize>(buffer.data.size() * sizeof(T)));
    if (!out) throw IoError("write failed: " + raw.string());
  }
  nlohmann::json j;
  j["width"] = buffer.width;
  j["height"] = buffer.height;
  j["channels"] = buffer.channels;
  j["dtype"] = dtype_name<T>();
  std::ofstream out(meta);
  if (!out) throw IoError("cannot write " + meta.string());
  out << j.dump() << '\n';
}

template <typename T>
RawBuffer<T> read_raw(const fs::path& stem) {
  fs::path raw = stem, meta = stem;
  raw += ".raw";
  meta += ".json";
  std::ifstream min(meta);
  if (!min) throw IoError("cannot open " + meta.string());
  nlohmann::json j;
  try {
    min >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(meta.string() + ": " + e.what());
  }
  RawBuffer<T> buf;
  try {
    buf.width = j.at("width").get<int>();
    buf.height = j.at("height").get<int>();
    buf.channels = j.value("channels", 1);
    if (j.at("dtype").get<std::string>() != dtype_name<T>()) {
      throw FormatError(meta.string() + ": dtype is " + j.at("dtype").get<std::string>() +
                        ", expected " + dtype_name<T>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(meta.string() + ": " + e.what());
  }
  if (buf.width < 0 || buf.height < 0 || buf.channels < 1) {
    throw FormatError(meta.string() + ": invalid dimensions");
  }
  const auto count = static_cast<std::size_t>(buf.width) * static_cast<std::size_t>(buf.height) *
                     static_cast<std::size_t>(buf.channels);
  std::ifstream in(raw, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + raw.string());
  if (static_cast<std::size_t>(in.tellg()) != count * sizeof(T)) {
    throw FormatError(raw.string() + ": size does not match its sidecar");
  }
  in.seekg(0);
  buf.data.resize(count);
  in.read(reinterpret_cast<char*>(buf.data.data()), static_cast<std::streamsize>(count * sizeof(T)));
  return buf;
}

#define TOOTHLIFT_RAW(T)                                              \
  template std::string dtype_name<T>();                               \
  template void write_raw<T>(const fs::path&, const RawBuffer<T>&);   \
  template RawBuffer<T> read_raw<T>(const fs::path&);
TOOTHLIFT_RAW(std::int32_t)
TOOTHLIFT_RAW(std::uint32_t)
TOOTHLIFT_RAW(float)
TOOTHLIFT_RAW(double)
#undef TOOTHLIFT_RAW

}  // namespace toothlift
