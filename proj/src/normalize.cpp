#include "toothlift/normalize.hpp"

#include <Eigen/Geometry>

#include "toothlift/error.hpp"

namespace toothlift {

Vertices NormalizeTransform::apply(const Vertices& points) const {
  Vertices out = ((points.rowwise() + translation.transpose()) * rotation.transpose()) * scale;
  return out;
}

Vertices NormalizeTransform::apply_inverse(const Vertices& points) const {
  Vertices out = ((points / scale) * rotation).rowwise() - translation.transpose();
  return out;
}

double bbox_diagonal(const Vertices& points) {
  if (points.rows() == 0) return 0.0;
  return (points.colwise().maxCoeff() - points.colwise().minCoeff()).norm();
}

NormalizedMesh normalize(const LabeledMesh& mesh, const Eigen::Vector3d& up_axis) {
  if (mesh.empty()) throw ArgumentError("cannot normalize an empty mesh");
  const double up_norm = up_axis.norm();
  if (!(up_norm > 0.0) || !up_axis.allFinite()) {
    throw ArgumentError("up axis must be a finite non-zero vector");
  }

  NormalizeTransform t;
  t.translation = -mesh.vertices().colwise().mean().transpose();
  const Eigen::Vector3d up = up_axis / up_norm;
  if (up != Eigen::Vector3d::UnitZ()) {
    t.rotation = Eigen::Quaterniond::FromTwoVectors(up, Eigen::Vector3d::UnitZ())
                     .normalized()
                     .toRotationMatrix();
  }
  const Vertices rotated = (mesh.vertices().rowwise() + t.translation.transpose()) *
                           t.rotation.transpose();
  const double diag = bbox_diagonal(rotated);
  t.scale = diag > 0.0 ? 1.0 / diag : 1.0;
  return {mesh.with_vertices(t.apply(mesh.vertices())), t};
}

}  // namespace toothlift
