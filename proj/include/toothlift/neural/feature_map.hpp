#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>

#include "toothlift/error.hpp"

namespace toothlift::neural {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
/// 2 x N continuous points, row 0 = x (column axis), row 1 = y (row axis),
/// in texel units: texel (i, j) covers [i, i+1) x [j, j+1).
template <typename Scalar>
using Points = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;

/// C x H x W tensor stored as a C x (H*W) matrix, pixel (x, y) in column y*W + x.
template <typename Scalar>
struct FeatureMap {
  int height = 0;
  int width = 0;
  Matrix<Scalar> data;

  FeatureMap() = default;
  FeatureMap(int channels, int h, int w) : height(h), width(w), data(Matrix<Scalar>::Zero(channels, h * w)) {
    if (channels < 1 || h < 1 || w < 1) throw ArgumentError("feature map dimensions must be >= 1");
  }
  FeatureMap(int h, int w, Matrix<Scalar> values) : height(h), width(w), data(std::move(values)) {
    if (data.rows() < 1 || h < 1 || w < 1 || data.cols() != static_cast<Eigen::Index>(h) * w) {
      throw ArgumentError("feature map data does not match " + std::to_string(h) + "x" + std::to_string(w));
    }
  }

  int channels() const { return static_cast<int>(data.rows()); }
  auto pixel(int x, int y) { return data.col(static_cast<Eigen::Index>(y) * width + x); }
  auto pixel(int x, int y) const { return data.col(static_cast<Eigen::Index>(y) * width + x); }
};

namespace detail {

// Interpolation footprint of one point along one axis: texel centers sit at
// i + 0.5 and the coordinate is clamped to [0.5, n - 0.5].
template <typename Scalar>
struct Axis {
  int i0 = 0, i1 = 0;
  Scalar frac = 0;
  bool inside = false;  // derivative w.r.t. the coordinate is nonzero

  Axis(Scalar coord, int n) {
    const Scalar u = coord - Scalar(0.5);
    const Scalar hi = Scalar(n - 1);
    inside = n > 1 && u > Scalar(0) && u < hi;
    const Scalar c = std::clamp(u, Scalar(0), hi);
    i0 = std::min(static_cast<int>(std::floor(c)), std::max(n - 2, 0));
    i1 = std::min(i0 + 1, n - 1);
    frac = c - Scalar(i0);
  }
};

}  // namespace detail

/// Bilinear interpolation at each point; returns C x N.
template <typename Scalar>
Matrix<Scalar> bilinear_sample(const FeatureMap<Scalar>& map, const Points<Scalar>& points) {
  Matrix<Scalar> out(map.channels(), points.cols());
  for (Eigen::Index p = 0; p < points.cols(); ++p) {
    const detail::Axis<Scalar> ax(points(0, p), map.width), ay(points(1, p), map.height);
    out.col(p) = (Scalar(1) - ay.frac) * ((Scalar(1) - ax.frac) * map.pixel(ax.i0, ay.i0) + ax.frac * map.pixel(ax.i1, ay.i0)) +
                 ay.frac * ((Scalar(1) - ax.frac) * map.pixel(ax.i0, ay.i1) + ax.frac * map.pixel(ax.i1, ay.i1));
  }
  return out;
}

/// Adjoint of bilinear_sample. Accumulates d(map) into `grad_map` and, when
/// `grad_points` is non-null, writes d(points); clamped coordinates get zero.
template <typename Scalar>
void bilinear_sample_backward(const FeatureMap<Scalar>& map, const Points<Scalar>& points,
                              const Matrix<Scalar>& grad_out, Matrix<Scalar>& grad_map,
                              Points<Scalar>* grad_points = nullptr) {
  if (grad_points) *grad_points = Points<Scalar>::Zero(2, points.cols());
  const auto col = [&](int x, int y) { return static_cast<Eigen::Index>(y) * map.width + x; };
  for (Eigen::Index p = 0; p < points.cols(); ++p) {
    const detail::Axis<Scalar> ax(points(0, p), map.width), ay(points(1, p), map.height);
    const Scalar fx = ax.frac, fy = ay.frac;
    const auto g = grad_out.col(p);
    grad_map.col(col(ax.i0, ay.i0)) += (Scalar(1) - fx) * (Scalar(1) - fy) * g;
    grad_map.col(col(ax.i1, ay.i0)) += fx * (Scalar(1) - fy) * g;
    grad_map.col(col(ax.i0, ay.i1)) += (Scalar(1) - fx) * fy * g;
    grad_map.col(col(ax.i1, ay.i1)) += fx * fy * g;
    if (!grad_points) continue;
    const auto a = map.pixel(ax.i0, ay.i0), b = map.pixel(ax.i1, ay.i0);
    const auto c = map.pixel(ax.i0, ay.i1), d = map.pixel(ax.i1, ay.i1);
    if (ax.inside) (*grad_points)(0, p) = g.dot((Scalar(1) - fy) * (b - a) + fy * (d - c));
    if (ay.inside) (*grad_points)(1, p) = g.dot((Scalar(1) - fx) * (c - a) + fx * (d - b));
  }
}

/// Row-major grid of ceil(h/stride) x ceil(w/stride) points at the centers of
/// the stride-sized cells, the last cell clipped to the map.
template <typename Scalar = double>
Points<Scalar> reference_grid(int h, int w, int stride) {
  if (stride < 1) throw ArgumentError("grid stride must be >= 1");
  if (h < 1 || w < 1) throw ArgumentError("grid dimensions must be >= 1");
  const int gh = (h + stride - 1) / stride, gw = (w + stride - 1) / stride;
  Points<Scalar> out(2, static_cast<Eigen::Index>(gh) * gw);
  for (int j = 0; j < gh; ++j) {
    for (int i = 0; i < gw; ++i) {
      const Eigen::Index p = static_cast<Eigen::Index>(j) * gw + i;
      out(0, p) = Scalar(i * stride + std::min((i + 1) * stride, w)) / Scalar(2);
      out(1, p) = Scalar(j * stride + std::min((j + 1) * stride, h)) / Scalar(2);
    }
  }
  return out;
}

}  // namespace toothlift::neural
