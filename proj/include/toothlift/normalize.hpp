#pragma once

#include <Eigen/Core>

#include "toothlift/mesh.hpp"

namespace toothlift {

/// Similarity transform p' = scale * rotation * (p + translation).
struct NormalizeTransform {
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  double scale = 1.0;

  Vertices apply(const Vertices& points) const;
  Vertices apply_inverse(const Vertices& points) const;
};

struct NormalizedMesh {
  LabeledMesh mesh;
  NormalizeTransform transform;
};

/// Moves the vertex centroid to the origin, rotates `up_axis` onto +Z and
/// scales the (rotated) bounding-box diagonal to 1. ArgumentError for an
/// empty mesh or a zero up axis.
NormalizedMesh normalize(const LabeledMesh& mesh,
                         const Eigen::Vector3d& up_axis = Eigen::Vector3d::UnitZ());

/// Length of the axis-aligned bounding-box diagonal.
double bbox_diagonal(const Vertices& points);

}  // namespace toothlift
