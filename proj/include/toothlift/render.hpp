#pragma once

#include <array>
#include <optional>

#include "toothlift/camera.hpp"
#include "toothlift/image.hpp"
#include "toothlift/mesh.hpp"

namespace toothlift {

inline constexpr int kEmptyFace = -1;
inline constexpr double kEmptyBary = -1.0;

/// Rasterized view of a mesh. Covered pixels hold the nearest face, its
/// barycentric coordinates and camera-space depth; empty pixels hold
/// kEmptyFace, kEmptyBary and +infinity.
struct RenderOutput {
  int view_id = 0;
  std::array<Image<float>, 3> rgb;     // [0, 1]
  Image<int> face_id;
  std::array<Image<double>, 3> bary;
  Image<double> depth;

  int width() const { return static_cast<int>(face_id.cols()); }
  int height() const { return static_cast<int>(face_id.rows()); }
  bool covered(Pixel p) const { return face_id(p.v, p.u) != kEmptyFace; }
};

/// One probability channel per tooth class 1..16 (channel c <-> class c+1).
struct MaskMap {
  std::array<Image<float>, kNumTeeth> channels;

  int width() const { return static_cast<int>(channels[0].cols()); }
  int height() const { return static_cast<int>(channels[0].rows()); }
};

/// Z-buffered rasterization with flat two-sided Lambertian shading lit from
/// the camera. Faces are tested at pixel centres, boundaries inclusive; equal
/// depths keep the lower face index. No back-face culling.
RenderOutput render(const LabeledMesh& mesh, const Camera& camera);

/// Vertex a covered pixel is attributed to: the face corner with the largest
/// barycentric weight, ties to the lowest vertex index. ArgumentError when the
/// pixel lies outside the image.
std::optional<int> pixel_vertex(const RenderOutput& output, const LabeledMesh& mesh,
                                Pixel pixel);

/// Per-pixel attributed vertex for a whole view (-1 where empty).
Image<int> vertex_map(const RenderOutput& output, const LabeledMesh& mesh);

/// Binary mask map from the labels of the attributed vertices. StateError
/// when the mesh has no labels.
MaskMap render_mask_map(const LabeledMesh& mesh, const RenderOutput& output);
MaskMap render_mask_map(const LabeledMesh& mesh, const Camera& camera);

}  // namespace toothlift
