#pragma once

#include <Eigen/Core>

#include <vector>

namespace toothlift {

enum class ProjectionKind { orthographic, perspective };

/// A fixed viewpoint. `view` maps world to camera space (camera looks down
/// -Z, +Y up); `clip` maps camera space to clip space. Clip-space x/y in
/// [-1, 1] cover the image, +y towards row 0.
struct Camera {
  int view_id = 0;
  Eigen::Matrix4d view = Eigen::Matrix4d::Identity();
  Eigen::Matrix4d clip = Eigen::Matrix4d::Identity();
  int width = 0;
  int height = 0;
  ProjectionKind kind = ProjectionKind::orthographic;

  /// The full world-to-clip projection.
  Eigen::Matrix4d projection() const { return clip * view; }
  /// Camera position in world space.
  Eigen::Vector3d eye() const;
  /// Unit viewing direction in world space.
  Eigen::Vector3d forward() const;
};

struct ViewSetOptions {
  /// Elevation of the ring cameras above the occlusal (XY) plane.
  double elevation_deg = 30.0;
  /// Half-width of the visible square at the origin, in normalized units.
  double half_extent = 0.6;
  /// Eye distance from the origin.
  double distance = 2.0;
  ProjectionKind kind = ProjectionKind::orthographic;
};

/// One top-down occlusal camera (view 0) followed by count-1 cameras evenly
/// spaced in azimuth on a ring at `elevation_deg`, all aimed at the origin.
/// ArgumentError for count < 1 or a non-positive image size.
std::vector<Camera> make_view_set(int count, int width, int height,
                                  const ViewSetOptions& options = {});

/// Right-handed look-at view matrix.
Eigen::Matrix4d look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                        const Eigen::Vector3d& up);

}  // namespace toothlift
