#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace toothlift {

/// Single-channel raster, height x width, row 0 at the top.
template <typename T>
using Image = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using LabelImage = Image<std::uint8_t>;

/// Pixel coordinate: u = column, v = row.
struct Pixel {
  int u;
  int v;
};

}  // namespace toothlift
