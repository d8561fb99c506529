#include "toothlift/synth.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "toothlift/error.hpp"

namespace toothlift {
namespace {

Faces grid_faces(int rows, int cols) {
  Faces faces(2 * static_cast<Eigen::Index>(rows - 1) * (cols - 1), 3);
  Eigen::Index f = 0;
  for (int r = 0; r + 1 < rows; ++r) {
    for (int c = 0; c + 1 < cols; ++c) {
      const int a = r * cols + c, b = a + 1, d = a + cols, e = d + 1;
      faces.row(f++) << a, b, e;
      faces.row(f++) << a, e, d;
    }
  }
  return faces;
}

// Flips every face when the first one faces -Z.
void orient_up(const Vertices& v, Faces& faces) {
  if (faces.rows() == 0) return;
  const Eigen::Vector3d a = v.row(faces(0, 0)), b = v.row(faces(0, 1)), c = v.row(faces(0, 2));
  if ((b - a).cross(c - a).z() < 0.0) faces.col(1).swap(faces.col(2));
}

}  // namespace

LabeledMesh synth_arch(const ArchParams& p) {
  if (p.teeth < 1 || p.teeth > kNumTeeth) throw ArgumentError("tooth count must be in 1..16");
  if (p.along < 2 || p.across < 2) throw ArgumentError("arch grid needs at least 2x2 vertices");
  if (!(p.semi_axis_x > 0.0) || !(p.semi_axis_y > 0.0) || !(p.width > 0.0) || !(p.radius > 0.0) ||
      !(p.span > 0.0) || p.span > 1.0 || p.radius_jitter < 0.0 || p.radius_jitter >= 1.0) {
    throw ArgumentError("arch dimensions out of range");
  }

  const double t_max = p.span * std::numbers::pi;
  const auto center = [&](double t) {
    return Eigen::Vector2d(p.semi_axis_x * std::sin(t), p.semi_axis_y * std::cos(t));
  };
  const auto normal = [&](double t) {
    const Eigen::Vector2d d(p.semi_axis_x * std::cos(t), -p.semi_axis_y * std::sin(t));
    return Eigen::Vector2d(-d.y(), d.x()).normalized();
  };

  // Arc-length table for spacing the bumps evenly along the centreline.
  constexpr int kSamples = 4096;
  std::vector<double> arc(kSamples + 1, 0.0);
  const auto t_of = [&](int i) { return -t_max + 2.0 * t_max * i / kSamples; };
  for (int i = 1; i <= kSamples; ++i) arc[i] = arc[i - 1] + (center(t_of(i)) - center(t_of(i - 1))).norm();
  const auto t_at_length = [&](double s) {
    int i = 1;
    while (i < kSamples && arc[i] < s) ++i;
    const double f = (s - arc[i - 1]) / (arc[i] - arc[i - 1]);
    return t_of(i - 1) + f * (t_of(i) - t_of(i - 1));
  };

  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> jitter(-p.radius_jitter, p.radius_jitter);
  std::vector<Eigen::Vector2d> centers;
  std::vector<double> radii;
  for (int k = 0; k < p.teeth; ++k) {
    centers.push_back(center(t_at_length((k + 0.5) / p.teeth * arc.back())));
    radii.push_back(p.radius * (1.0 + jitter(rng)));
    if (radii.back() + p.margin >= 0.5 * p.width) throw ArgumentError("bump radius exceeds the strip half-width");
  }
  for (int k = 1; k < p.teeth; ++k) {
    if ((centers[k] - centers[k - 1]).norm() <= radii[k] + radii[k - 1] + 2.0 * p.margin) {
      throw ArgumentError("bumps " + std::to_string(k) + " and " + std::to_string(k + 1) + " overlap");
    }
  }

  const int rows = p.across, cols = p.along;
  Vertices v(static_cast<Eigen::Index>(rows) * cols, 3);
  Labels labels = Labels::Zero(v.rows());
  for (int r = 0; r < rows; ++r) {
    const double s = p.width * (static_cast<double>(r) / (rows - 1) - 0.5);
    for (int c = 0; c < cols; ++c) {
      const double t = -t_max + 2.0 * t_max * c / (cols - 1);
      Eigen::Vector2d xy = center(t) + s * normal(t);
      const Eigen::Index i = static_cast<Eigen::Index>(r) * cols + c;
      double z = 0.0;
      for (int k = 0; k < p.teeth; ++k) {
        const Eigen::Vector2d rel = xy - centers[k];
        const double d = rel.norm(), outer = radii[k] + p.margin;
        if (d >= outer) continue;
        // Radial warp that spreads the disk's vertices evenly over the
        // surface arc length of dome plus margin, so edges stay short on the
        // steep flank instead of jumping from the floor to the dome.
        const double rk = radii[k];
        const double arc = d / outer * (0.5 * std::numbers::pi * rk + p.margin);
        const double warped = arc < 0.5 * std::numbers::pi * rk ? rk * std::sin(arc / rk)
                                                                  : rk + arc - 0.5 * std::numbers::pi * rk;
        if (d > 0.0) xy = centers[k] + rel * (warped / d);
        if (arc < 0.5 * std::numbers::pi * rk) {
          z = rk * std::cos(arc / rk);
          labels[i] = k + 1;
        }
      }
      v.row(i) << xy.x(), xy.y(), z;
    }
  }
  Faces faces = grid_faces(rows, cols);
  orient_up(v, faces);
  return LabeledMesh(std::move(v), std::move(faces), std::move(labels), p.jaw);
}

LabeledMesh synth_grid(const GridParams& p) {
  if (p.n < 2) throw ArgumentError("grid needs at least 2x2 vertices");
  if (p.tile < 1) throw ArgumentError("tile size must be >= 1");
  const int tiles = (p.n + p.tile - 1) / p.tile;
  std::mt19937_64 rng(p.seed);
  std::uniform_int_distribution<int> cls(0, kNumClasses - 1);
  std::vector<int> tile_class(static_cast<std::size_t>(tiles) * tiles);
  for (auto& t : tile_class) t = cls(rng);

  Vertices v(static_cast<Eigen::Index>(p.n) * p.n, 3);
  Labels labels(v.rows());
  for (int r = 0; r < p.n; ++r) {
    for (int c = 0; c < p.n; ++c) {
      const Eigen::Index i = static_cast<Eigen::Index>(r) * p.n + c;
      v.row(i) << c, r, 0.0;
      labels[i] = tile_class[static_cast<std::size_t>(r / p.tile) * tiles + c / p.tile];
    }
  }
  Faces faces = grid_faces(p.n, p.n);
  orient_up(v, faces);
  return LabeledMesh(std::move(v), std::move(faces), std::move(labels));
}

}  // namespace toothlift
