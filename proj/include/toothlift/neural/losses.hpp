#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "toothlift/error.hpp"
#include "toothlift/hungarian.hpp"
#include "toothlift/neural/feature_map.hpp"

namespace toothlift::neural {

inline constexpr double kProbabilityClamp = 1e-12;
inline constexpr double kDiceSmoothing = 1.0;
inline constexpr int kLossClasses = 17;
inline constexpr int kLossTeeth = 16;

/// Loss value with its gradient w.r.t. the prediction argument.
template <typename Scalar>
struct Loss {
  Scalar value = 0;
  Matrix<Scalar> grad;
  bool clamped = false;  // some probability hit the clamp
};

namespace detail {

template <typename A, typename B>
void check_same_shape(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ArgumentError("prediction and target shapes differ");
}

}  // namespace detail

/// Negative log-likelihood of the ground-truth class summed over matched
/// (prediction row, ground-truth index) pairs. `probs` is N x 17.
template <typename Derived>
Loss<typename Derived::Scalar> loss_mc(const Eigen::MatrixBase<Derived>& probs, const AssignmentResult& assignment,
                                       const std::vector<int>& gt_classes) {
  using Scalar = typename Derived::Scalar;
  if (probs.cols() != kLossClasses) throw ArgumentError("class probabilities need 17 columns");
  Loss<Scalar> out;
  out.grad = Matrix<Scalar>::Zero(probs.rows(), probs.cols());
  for (const auto& [row, gt] : assignment.pairs) {
    if (row < 0 || row >= probs.rows() || gt < 0 || gt >= static_cast<int>(gt_classes.size())) {
      throw ArgumentError("assignment pair out of range");
    }
    const int cls = gt_classes[static_cast<std::size_t>(gt)];
    if (cls < 0 || cls >= kLossClasses) throw ArgumentError("ground-truth class out of range");
    const Scalar p = probs(row, cls);
    if (p < Scalar(kProbabilityClamp)) {
      out.clamped = true;
      out.value -= std::log(Scalar(kProbabilityClamp));
    } else {
      out.value -= std::log(p);
      out.grad(row, cls) -= Scalar(1) / p;
    }
  }
  return out;
}

/// 1 - (2 sum(p g) + s) / (sum p + sum g + s), s = 1.
template <typename DerivedP, typename DerivedG>
Loss<typename DerivedP::Scalar> loss_dice(const Eigen::MatrixBase<DerivedP>& pred,
                                          const Eigen::MatrixBase<DerivedG>& gt) {
  using Scalar = typename DerivedP::Scalar;
  detail::check_same_shape(pred, gt);
  const Scalar s(kDiceSmoothing);
  const Scalar num = Scalar(2) * pred.cwiseProduct(gt).sum() + s;
  const Scalar den = pred.sum() + gt.sum() + s;
  Loss<Scalar> out;
  out.value = Scalar(1) - num / den;
  out.grad = ((num - Scalar(2) * gt.array() * den) / (den * den)).matrix();
  return out;
}

/// Mean binary cross-entropy with predictions clamped to [1e-12, 1 - 1e-12].
template <typename DerivedP, typename DerivedG>
Loss<typename DerivedP::Scalar> loss_bce(const Eigen::MatrixBase<DerivedP>& pred,
                                         const Eigen::MatrixBase<DerivedG>& gt) {
  using Scalar = typename DerivedP::Scalar;
  detail::check_same_shape(pred, gt);
  if (pred.size() == 0) throw ArgumentError("empty prediction");
  const Scalar lo(kProbabilityClamp), hi = Scalar(1) - Scalar(kProbabilityClamp);
  const Scalar n = Scalar(pred.size());
  Loss<Scalar> out;
  out.grad = Matrix<Scalar>::Zero(pred.rows(), pred.cols());
  for (Eigen::Index j = 0; j < pred.cols(); ++j) {
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
      const Scalar raw = pred(i, j), g = gt(i, j);
      const Scalar p = std::clamp(raw, lo, hi);
      out.clamped = out.clamped || p != raw;
      out.value -= g * std::log(p) + (Scalar(1) - g) * std::log(Scalar(1) - p);
      if (p == raw) out.grad(i, j) = (-g / p + (Scalar(1) - g) / (Scalar(1) - p)) / n;
    }
  }
  out.value /= n;
  return out;
}

/// Presence confidences of the 16 teeth against presence indicators.
template <typename DerivedP, typename DerivedG>
Loss<typename DerivedP::Scalar> loss_conf(const Eigen::MatrixBase<DerivedP>& conf,
                                          const Eigen::MatrixBase<DerivedG>& presence) {
  if (conf.size() != kLossTeeth || presence.size() != kLossTeeth) {
    throw ArgumentError("confidence and presence vectors need 16 entries");
  }
  return loss_bce(conf, presence);
}

/// Mean 17-class cross-entropy of softmax(logits); logits are 17 x N, one
/// column per pixel.
template <typename Derived>
Loss<typename Derived::Scalar> loss_ce(const Eigen::MatrixBase<Derived>& logits, const Eigen::VectorXi& gt) {
  using Scalar = typename Derived::Scalar;
  if (logits.rows() != kLossClasses) throw ArgumentError("logits need 17 rows");
  if (logits.cols() != gt.size() || gt.size() == 0) throw ArgumentError("one target per logit column required");
  if ((gt.array() < 0).any() || (gt.array() >= kLossClasses).any()) throw ArgumentError("target class out of range");
  const Scalar n = Scalar(gt.size());
  Loss<Scalar> out;
  out.grad.resize(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const Scalar m = logits.col(j).maxCoeff();
    const Vector<Scalar> e = (logits.col(j).array() - m).exp().matrix();
    const Scalar z = e.sum();
    out.value -= logits(gt[j], j) - m - std::log(z);
    out.grad.col(j) = e / (z * n);
    out.grad(gt[j], j) -= Scalar(1) / n;
  }
  out.value /= n;
  return out;
}

namespace detail {

inline constexpr std::array<std::array<int, 3>, 3> kSobelX = {{{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}}};
inline constexpr std::array<std::array<int, 3>, 3> kSobelY = {{{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}}};

}  // namespace detail

/// Mean over pixels of |Sx*(pred-gt)| + |Sy*(pred-gt)|, 3x3 Sobel with
/// replicated borders. Masks are H x W.
template <typename DerivedP, typename DerivedG>
Loss<typename DerivedP::Scalar> loss_boundary(const Eigen::MatrixBase<DerivedP>& pred,
                                              const Eigen::MatrixBase<DerivedG>& gt) {
  using Scalar = typename DerivedP::Scalar;
  detail::check_same_shape(pred, gt);
  const auto h = static_cast<int>(pred.rows()), w = static_cast<int>(pred.cols());
  if (h < 3 || w < 3) throw ArgumentError("boundary loss needs masks of at least 3x3");
  const Matrix<Scalar> diff = pred - gt.template cast<Scalar>();
  const Scalar n = Scalar(h) * Scalar(w);
  Loss<Scalar> out;
  out.grad = Matrix<Scalar>::Zero(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      Scalar gx = 0, gy = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const Scalar d = diff(std::clamp(y + dy, 0, h - 1), std::clamp(x + dx, 0, w - 1));
          gx += Scalar(detail::kSobelX[dy + 1][dx + 1]) * d;
          gy += Scalar(detail::kSobelY[dy + 1][dx + 1]) * d;
        }
      }
      out.value += std::abs(gx) + std::abs(gy);
      const Scalar sx = Scalar((gx > 0) - (gx < 0)), sy = Scalar((gy > 0) - (gy < 0));
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          out.grad(std::clamp(y + dy, 0, h - 1), std::clamp(x + dx, 0, w - 1)) +=
              (sx * Scalar(detail::kSobelX[dy + 1][dx + 1]) + sy * Scalar(detail::kSobelY[dy + 1][dx + 1])) / n;
        }
      }
    }
  }
  out.value /= n;
  return out;
}

struct LossWeights {
  double mc = 1.0;
  double peg = 1.0;
  double mr = 2.0;
  double bce = 1.0;
  double dice = 1.0;
  double conf = 1.0;
  double ce = 1.0;
  double dice_mr = 1.0;
  double boundary = 1.0;

  void validate() const {
    for (double v : {mc, peg, mr, bce, dice, conf, ce, dice_mr, boundary}) {
      if (!std::isfinite(v) || v < 0.0) throw ArgumentError("loss weights must be finite and non-negative");
    }
  }
};

struct LossComponents {
  double mc = 0.0;
  double bce = 0.0;
  double dice = 0.0;  // prompt-decoder masks
  double conf = 0.0;
  double ce = 0.0;
  double dice_mr = 0.0;  // refiner masks
  double boundary = 0.0;
};

inline double loss_peg(const LossComponents& c, const LossWeights& w) {
  return w.bce * c.bce + w.dice * c.dice + w.conf * c.conf;
}

inline double loss_mr(const LossComponents& c, const LossWeights& w) {
  return w.ce * c.ce + w.dice_mr * c.dice_mr + w.boundary * c.boundary;
}

inline double loss_total(const LossComponents& c, const LossWeights& w = {}) {
  w.validate();
  for (double v : {c.mc, c.bce, c.dice, c.conf, c.ce, c.dice_mr, c.boundary}) {
    if (!std::isfinite(v)) throw NumericError("loss component is not finite");
  }
  return w.mc * c.mc + w.peg * loss_peg(c, w) + w.mr * loss_mr(c, w);
}

}  // namespace toothlift::neural
