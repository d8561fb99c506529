#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "toothlift/image.hpp"

namespace toothlift {

/// 8-bit grayscale PNG.
void write_png(const std::filesystem::path& path, const Image<std::uint8_t>& gray);
/// 8-bit RGB PNG from three [0, 1] planes (values rounded and clamped).
void write_png(const std::filesystem::path& path, const std::array<Image<float>, 3>& rgb);

struct PngInfo {
  int width = 0;
  int height = 0;
  int channels = 0;
};
PngInfo read_png_info(const std::filesystem::path& path);
/// Reads an 8-bit single-channel PNG; FormatError for any other layout.
Image<std::uint8_t> read_png_gray(const std::filesystem::path& path);

/// Raw little-endian buffer `<stem>.raw` plus sidecar `<stem>.json` with
/// {"width", "height", "channels", "dtype"}. Data is channel-major, then
/// row-major.
template <typename T>
struct RawBuffer {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<T> data;
};

template <typename T>
void write_raw(const std::filesystem::path& stem, const RawBuffer<T>& buffer);
template <typename T>
RawBuffer<T> read_raw(const std::filesystem::path& stem);

/// dtype tag used in sidecars ("int32", "uint32", "float32", "float64").
template <typename T>
std::string dtype_name();

}  // namespace toothlift
