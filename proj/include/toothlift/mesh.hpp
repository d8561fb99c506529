#pragma once

#include <Eigen/Core>

#include <optional>

namespace toothlift {

/// 16 teeth plus gingiva/background.
inline constexpr int kNumClasses = 17;
inline constexpr int kNumTeeth = 16;

using Vertices = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Faces = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;
/// Per-vertex class indices in 0..16.
using Labels = Eigen::VectorXi;

enum class Jaw { upper, lower };

/// Triangle mesh with optional per-vertex class labels.
///
/// Construction validates that every face references existing, distinct
/// vertices and that labels (if any) are vertex-aligned and in 0..16.
/// Instances are immutable; derive modified copies with `with_*`.
class LabeledMesh {
 public:
  LabeledMesh() = default;
  LabeledMesh(Vertices vertices, Faces faces,
              std::optional<Labels> labels = std::nullopt,
              Jaw jaw = Jaw::upper);

  const Vertices& vertices() const { return vertices_; }
  const Faces& faces() const { return faces_; }
  const std::optional<Labels>& labels() const { return labels_; }
  bool has_labels() const { return labels_.has_value(); }
  /// Labels or StateError.
  const Labels& require_labels() const;
  Jaw jaw() const { return jaw_; }

  Eigen::Index vertex_count() const { return vertices_.rows(); }
  Eigen::Index face_count() const { return faces_.rows(); }
  bool empty() const { return vertices_.rows() == 0; }

  LabeledMesh with_labels(Labels labels) const;
  LabeledMesh without_labels() const;
  LabeledMesh with_vertices(Vertices vertices) const;

  /// Unit normal of face f (zero vector for zero-area faces).
  Eigen::Vector3d face_normal(Eigen::Index f) const;

 private:
  Vertices vertices_;
  Faces faces_;
  std::optional<Labels> labels_;
  Jaw jaw_ = Jaw::upper;
};

/// Throws LabelError unless every entry is in 0..16.
void validate_labels(const Labels& labels);

}  // namespace toothlift
