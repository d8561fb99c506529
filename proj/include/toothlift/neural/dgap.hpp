#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <random>
#include <string>
#include <string_view>

#include "toothlift/error.hpp"
#include "toothlift/neural/feature_map.hpp"

namespace toothlift::neural {

/// Deformable global attention block: a pointwise offset net displaces a
/// regular sampling grid, single-head attention runs on the resampled
/// features, and the projected result is upsampled and added to the input.
template <typename Scalar>
struct DgapParams {
  // offset net: C -> hidden -> 2, tanh between, max_offset * tanh on output
  Matrix<Scalar> w1, w2;
  Vector<Scalar> b1, b2;
  Matrix<Scalar> wq, wk, wv, wo;
  int grid_stride = 1;
  Scalar max_offset = 2;  // pixels

  static constexpr std::array<std::string_view, 8> kTensorNames = {"offset_w1", "offset_b1", "offset_w2",
                                                                   "offset_b2", "wq",        "wk",
                                                                   "wv",        "wo"};

  /// All-zero parameters; max_offset defaults to two grid cells.
  static DgapParams zeros(int channels, int hidden, int stride) {
    if (channels < 1 || hidden < 1) throw ArgumentError("channel counts must be >= 1");
    DgapParams p;
    p.w1 = Matrix<Scalar>::Zero(hidden, channels);
    p.b1 = Vector<Scalar>::Zero(hidden);
    p.w2 = Matrix<Scalar>::Zero(2, hidden);
    p.b2 = Vector<Scalar>::Zero(2);
    p.wq = p.wk = p.wv = p.wo = Matrix<Scalar>::Zero(channels, channels);
    p.grid_stride = stride;
    p.max_offset = Scalar(2 * stride);
    p.validate();
    return p;
  }

  /// Gaussian entries with standard deviation `scale`.
  template <typename Rng>
  static DgapParams random(int channels, int hidden, int stride, Scalar scale, Rng& rng) {
    DgapParams p = zeros(channels, hidden, stride);
    std::normal_distribution<double> normal(0.0, static_cast<double>(scale));
    p.for_each_tensor([&](auto& t, std::string_view) {
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = Scalar(normal(rng));
    });
    return p;
  }

  int channels() const { return static_cast<int>(wq.rows()); }
  int hidden() const { return static_cast<int>(w1.rows()); }

  template <typename F>
  void for_each_tensor(F&& f) {
    f(w1, kTensorNames[0]); f(b1, kTensorNames[1]); f(w2, kTensorNames[2]); f(b2, kTensorNames[3]);
    f(wq, kTensorNames[4]); f(wk, kTensorNames[5]); f(wv, kTensorNames[6]); f(wo, kTensorNames[7]);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    const_cast<DgapParams*>(this)->for_each_tensor(
        [&](const auto& t, std::string_view name) { f(t, name); });
  }

  Eigen::Index size() const {
    Eigen::Index n = 0;
    for_each_tensor([&](const auto& t, std::string_view) { n += t.size(); });
    return n;
  }

  /// Concatenation of every tensor (column-major each) in kTensorNames order.
  Vector<Scalar> flatten() const {
    Vector<Scalar> out(size());
    Eigen::Index at = 0;
    for_each_tensor([&](const auto& t, std::string_view) {
      out.segment(at, t.size()) = t.reshaped();
      at += t.size();
    });
    return out;
  }

  /// Same shapes and settings, tensor values taken from `flat`.
  DgapParams unflatten(const Vector<Scalar>& flat) const {
    if (flat.size() != size()) throw ArgumentError("flat parameter vector has the wrong length");
    DgapParams out = *this;
    Eigen::Index at = 0;
    out.for_each_tensor([&](auto& t, std::string_view) {
      t.reshaped() = flat.segment(at, t.size());
      at += t.size();
    });
    return out;
  }

  void validate() const {
    const auto c = wq.rows();
    const auto h = w1.rows();
    const bool shapes = c >= 1 && h >= 1 && w1.cols() == c && b1.size() == h && w2.rows() == 2 &&
                        w2.cols() == h && b2.size() == 2 && wq.cols() == c && wk.rows() == c &&
                        wk.cols() == c && wv.rows() == c && wv.cols() == c && wo.rows() == c &&
                        wo.cols() == c;
    if (!shapes) throw ArgumentError("inconsistent DGAP parameter shapes");
    bool finite = true;
    for_each_tensor([&](const auto& t, std::string_view) { finite = finite && t.allFinite(); });
    if (!finite) throw ArgumentError("DGAP parameters must be finite");
    if (grid_stride < 1) throw ArgumentError("grid stride must be >= 1");
    if (!std::isfinite(static_cast<double>(max_offset)) || max_offset < Scalar(0)) {
      throw ArgumentError("max_offset must be finite and >= 0");
    }
  }
};

/// Intermediate values kept by the forward pass for the backward pass.
template <typename Scalar>
struct DgapCache {
  int grid_h = 0, grid_w = 0;
  Points<Scalar> grid, points, upsample_points;
  Matrix<Scalar> reference;  // input sampled at the grid, C x P
  Matrix<Scalar> hidden;     // tanh activations, hidden x P
  Matrix<Scalar> bound;      // tanh of the offset logits, 2 x P
  Matrix<Scalar> deformed, q, k, v, attention, mixed, projected;
};

template <typename Scalar>
struct DgapGradients {
  DgapParams<Scalar> params;  // same shapes as the forward parameters
  Matrix<Scalar> input;       // C x (H*W)
};

template <typename Scalar>
FeatureMap<Scalar> dgap_forward(const FeatureMap<Scalar>& input, const DgapParams<Scalar>& params,
                                DgapCache<Scalar>* cache = nullptr) {
  params.validate();
  if (input.channels() != params.channels()) {
    throw ArgumentError("input has " + std::to_string(input.channels()) + " channels, parameters expect " +
                        std::to_string(params.channels()));
  }
  if (!input.data.allFinite()) throw ArgumentError("input feature map must be finite");
  DgapCache<Scalar> local;
  DgapCache<Scalar>& c = cache ? *cache : local;
  const int s = params.grid_stride;
  c.grid_h = (input.height + s - 1) / s;
  c.grid_w = (input.width + s - 1) / s;
  c.grid = reference_grid<Scalar>(input.height, input.width, s);

  c.reference = bilinear_sample(input, c.grid);
  c.hidden = ((params.w1 * c.reference).colwise() + params.b1).array().tanh().matrix();
  c.bound = ((params.w2 * c.hidden).colwise() + params.b2).array().tanh().matrix();
  c.points = c.grid + params.max_offset * c.bound;
  c.deformed = bilinear_sample(input, c.points);

  c.q = params.wq * c.deformed;
  c.k = params.wk * c.deformed;
  c.v = params.wv * c.deformed;
  // attention(i, j): weight of key j for query i
  Matrix<Scalar> logits = (c.q.transpose() * c.k) / std::sqrt(Scalar(params.channels()));
  const Vector<Scalar> row_max = logits.rowwise().maxCoeff();
  c.attention = (logits.colwise() - row_max).array().exp().matrix();
  c.attention.array().colwise() /= c.attention.rowwise().sum().array();
  c.mixed = c.v * c.attention.transpose();
  c.projected = params.wo * c.mixed;

  c.upsample_points.resize(2, static_cast<Eigen::Index>(input.height) * input.width);
  for (int y = 0; y < input.height; ++y) {
    for (int x = 0; x < input.width; ++x) {
      const Eigen::Index p = static_cast<Eigen::Index>(y) * input.width + x;
      c.upsample_points(0, p) = (Scalar(x) + Scalar(0.5)) / Scalar(s);
      c.upsample_points(1, p) = (Scalar(y) + Scalar(0.5)) / Scalar(s);
    }
  }
  const FeatureMap<Scalar> coarse(c.grid_h, c.grid_w, c.projected);
  return FeatureMap<Scalar>(input.height, input.width, input.data + bilinear_sample(coarse, c.upsample_points));
}

/// Gradients of sum(grad_output .* dgap_forward(input, params)). max_offset and
/// grid_stride are hyperparameters and receive none.
template <typename Scalar>
DgapGradients<Scalar> dgap_backward(const FeatureMap<Scalar>& input, const DgapParams<Scalar>& params,
                                    const DgapCache<Scalar>& c, const Matrix<Scalar>& grad_output) {
  if (grad_output.rows() != input.data.rows() || grad_output.cols() != input.data.cols()) {
    throw ArgumentError("output gradient does not match the feature map");
  }
  DgapGradients<Scalar> g;
  g.params = params;
  g.input = grad_output;

  const FeatureMap<Scalar> coarse(c.grid_h, c.grid_w, c.projected);
  Matrix<Scalar> d_projected = Matrix<Scalar>::Zero(c.projected.rows(), c.projected.cols());
  bilinear_sample_backward(coarse, c.upsample_points, grad_output, d_projected);

  g.params.wo = d_projected * c.mixed.transpose();
  const Matrix<Scalar> d_mixed = params.wo.transpose() * d_projected;
  const Matrix<Scalar> d_v = d_mixed * c.attention;
  const Matrix<Scalar> d_attention = d_mixed.transpose() * c.v;
  const Vector<Scalar> row_dot = (d_attention.array() * c.attention.array()).rowwise().sum();
  const Matrix<Scalar> d_logits =
      (c.attention.array() * (d_attention.colwise() - row_dot).array()).matrix() /
      std::sqrt(Scalar(params.channels()));
  const Matrix<Scalar> d_q = c.k * d_logits.transpose();
  const Matrix<Scalar> d_k = c.q * d_logits;

  g.params.wq = d_q * c.deformed.transpose();
  g.params.wk = d_k * c.deformed.transpose();
  g.params.wv = d_v * c.deformed.transpose();
  const Matrix<Scalar> d_deformed =
      params.wq.transpose() * d_q + params.wk.transpose() * d_k + params.wv.transpose() * d_v;

  Points<Scalar> d_points;
  bilinear_sample_backward(input, c.points, d_deformed, g.input, &d_points);

  const Matrix<Scalar> d_z2 =
      (params.max_offset * d_points.array() * (Scalar(1) - c.bound.array().square())).matrix();
  g.params.w2 = d_z2 * c.hidden.transpose();
  g.params.b2 = d_z2.rowwise().sum();
  const Matrix<Scalar> d_z1 =
      ((params.w2.transpose() * d_z2).array() * (Scalar(1) - c.hidden.array().square())).matrix();
  g.params.w1 = d_z1 * c.reference.transpose();
  g.params.b1 = d_z1.rowwise().sum();
  bilinear_sample_backward(input, c.grid, Matrix<Scalar>(params.w1.transpose() * d_z1), g.input);
  return g;
}

}  // namespace toothlift::neural
