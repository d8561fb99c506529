#include "toothlift/mesh.hpp"

#include <Eigen/Geometry>

#include <string>
#include <utility>

#include "toothlift/error.hpp"

namespace toothlift {

void validate_labels(const Labels& labels) {
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= kNumClasses) {
      throw LabelError("label " + std::to_string(labels[i]) + " at vertex " +
                       std::to_string(i) + " outside 0..16");
    }
  }
}

LabeledMesh::LabeledMesh(Vertices vertices, Faces faces,
                         std::optional<Labels> labels, Jaw jaw)
    : vertices_(std::move(vertices)),
      faces_(std::move(faces)),
      labels_(std::move(labels)),
      jaw_(jaw) {
  const auto n = vertices_.rows();
  for (Eigen::Index f = 0; f < faces_.rows(); ++f) {
    const auto a = faces_(f, 0), b = faces_(f, 1), c = faces_(f, 2);
    if (a < 0 || b < 0 || c < 0 || a >= n || b >= n || c >= n) {
      throw FormatError("face " + std::to_string(f) +
                        " references a vertex outside 0.." +
                        std::to_string(n - 1));
    }
    if (a == b || b == c || a == c) {
      throw FormatError("face " + std::to_string(f) + " is degenerate");
    }
  }
  if (labels_) {
    if (labels_->size() != n) {
      throw AlignmentError("label count " + std::to_string(labels_->size()) +
                           " != vertex count " + std::to_string(n));
    }
    validate_labels(*labels_);
  }
}

const Labels& LabeledMesh::require_labels() const {
  if (!labels_) throw StateError("mesh carries no labels");
  return *labels_;
}

LabeledMesh LabeledMesh::with_labels(Labels labels) const {
  return LabeledMesh(vertices_, faces_, std::move(labels), jaw_);
}

LabeledMesh LabeledMesh::without_labels() const {
  return LabeledMesh(vertices_, faces_, std::nullopt, jaw_);
}

LabeledMesh LabeledMesh::with_vertices(Vertices vertices) const {
  if (vertices.rows() != vertices_.rows()) {
    throw AlignmentError("replacement vertex count differs");
  }
  return LabeledMesh(std::move(vertices), faces_, labels_, jaw_);
}

Eigen::Vector3d LabeledMesh::face_normal(Eigen::Index f) const {
  const Eigen::Vector3d a = vertices_.row(faces_(f, 0));
  const Eigen::Vector3d b = vertices_.row(faces_(f, 1));
  const Eigen::Vector3d c = vertices_.row(faces_(f, 2));
  const Eigen::Vector3d n = (b - a).cross(c - a);
  const double len = n.norm();
  return len > 0.0 ? Eigen::Vector3d(n / len) : Eigen::Vector3d::Zero();
}

}  // namespace toothlift
