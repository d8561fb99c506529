#include "toothlift/camera.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

#include "toothlift/error.hpp"

namespace toothlift {

Eigen::Matrix4d look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                        const Eigen::Vector3d& up) {
  const Eigen::Vector3d f = (target - eye).normalized();
  const Eigen::Vector3d s = f.cross(up).normalized();
  const Eigen::Vector3d u = s.cross(f);
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.block<1, 3>(0, 0) = s.transpose();
  m.block<1, 3>(1, 0) = u.transpose();
  m.block<1, 3>(2, 0) = -f.transpose();
  m(0, 3) = -s.dot(eye);
  m(1, 3) = -u.dot(eye);
  m(2, 3) = f.dot(eye);
  return m;
}

Eigen::Vector3d Camera::eye() const {
  const Eigen::Matrix3d r = view.topLeftCorner<3, 3>();
  return -r.transpose() * view.topRightCorner<3, 1>();
}

Eigen::Vector3d Camera::forward() const {
  return -view.block<1, 3>(2, 0).transpose();
}

namespace {

Eigen::Matrix4d clip_matrix(const ViewSetOptions& o, double aspect) {
  const double near = o.distance - 1.5;
  const double far = o.distance + 1.5;
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  if (o.kind == ProjectionKind::orthographic) {
    m(0, 0) = 1.0 / (o.half_extent * aspect);
    m(1, 1) = 1.0 / o.half_extent;
    m(2, 2) = -2.0 / (far - near);
    m(2, 3) = -(far + near) / (far - near);
    m(3, 3) = 1.0;
  } else {
    const double f = o.distance / o.half_extent;  // 1 / tan(fov / 2)
    m(0, 0) = f / aspect;
    m(1, 1) = f;
    m(2, 2) = (far + near) / (near - far);
    m(2, 3) = 2.0 * far * near / (near - far);
    m(3, 2) = -1.0;
  }
  return m;
}

}  // namespace

std::vector<Camera> make_view_set(int count, int width, int height,
                                  const ViewSetOptions& options) {
  if (count < 1) throw ArgumentError("view count must be >= 1");
  if (width < 1 || height < 1) throw ArgumentError("image size must be positive");
  if (!(options.half_extent > 0.0) || !(options.distance > 1.5)) {
    throw ArgumentError("half extent must be > 0 and eye distance > 1.5");
  }
  if (!(std::abs(options.elevation_deg) < 90.0)) {
    throw ArgumentError("ring elevation must lie strictly between -90 and 90 degrees");
  }
  const double aspect = static_cast<double>(width) / height;
  const Eigen::Matrix4d clip = clip_matrix(options, aspect);

  std::vector<Camera> cams;
  cams.reserve(static_cast<std::size_t>(count));
  const auto add = [&](const Eigen::Vector3d& eye, const Eigen::Vector3d& up) {
    Camera c;
    c.view_id = static_cast<int>(cams.size());
    c.view = look_at(eye, Eigen::Vector3d::Zero(), up);
    c.clip = clip;
    c.width = width;
    c.height = height;
    c.kind = options.kind;
    cams.push_back(c);
  };

  add(options.distance * Eigen::Vector3d::UnitZ(), Eigen::Vector3d::UnitY());
  const int ring = count - 1;
  const double elev = options.elevation_deg * std::numbers::pi / 180.0;
  for (int k = 0; k < ring; ++k) {
    const double az = 2.0 * std::numbers::pi * k / ring;
    const Eigen::Vector3d dir(std::cos(elev) * std::cos(az), std::cos(elev) * std::sin(az),
                              std::sin(elev));
    add(options.distance * dir, Eigen::Vector3d::UnitZ());
  }
  return cams;
}

}  // namespace toothlift
