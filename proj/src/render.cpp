#include "toothlift/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "toothlift/error.hpp"

namespace toothlift {
namespace {

constexpr double kMinW = 1e-9;
constexpr float kAmbient = 0.15f;
const Eigen::Vector3f kBaseColor(0.93f, 0.89f, 0.82f);

// Twice the signed area of (a, b, p).
double edge(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& p) {
  return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

struct ProjectedVertex {
  Eigen::Vector2d screen;  // pixel units, y down
  double w;                // clip w
  double depth;            // distance along the viewing axis
};

}  // namespace

RenderOutput render(const LabeledMesh& mesh, const Camera& camera) {
  const int W = camera.width, H = camera.height;
  if (W < 1 || H < 1) throw ArgumentError("camera image size must be positive");

  RenderOutput out;
  out.view_id = camera.view_id;
  out.face_id = Image<int>::Constant(H, W, kEmptyFace);
  out.depth = Image<double>::Constant(H, W, std::numeric_limits<double>::infinity());
  for (auto& b : out.bary) b = Image<double>::Constant(H, W, kEmptyBary);
  for (auto& c : out.rgb) c = Image<float>::Zero(H, W);

  const Eigen::Matrix4d proj = camera.projection();
  std::vector<ProjectedVertex> pv(static_cast<std::size_t>(mesh.vertex_count()));
  for (Eigen::Index i = 0; i < mesh.vertex_count(); ++i) {
    const Eigen::Vector4d p(mesh.vertices()(i, 0), mesh.vertices()(i, 1),
                            mesh.vertices()(i, 2), 1.0);
    const Eigen::Vector4d c = proj * p;
    const Eigen::Vector4d cam = camera.view * p;
    auto& v = pv[static_cast<std::size_t>(i)];
    v.w = c.w();
    v.depth = -cam.z();
    const double x = c.x() / c.w(), y = c.y() / c.w();
    v.screen = {(x + 1.0) * 0.5 * W, (1.0 - y) * 0.5 * H};
  }

  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    const auto& a = pv[static_cast<std::size_t>(mesh.faces()(f, 0))];
    const auto& b = pv[static_cast<std::size_t>(mesh.faces()(f, 1))];
    const auto& c = pv[static_cast<std::size_t>(mesh.faces()(f, 2))];
    if (a.w <= kMinW || b.w <= kMinW || c.w <= kMinW) continue;
    const double area = edge(a.screen, b.screen, c.screen);
    if (area == 0.0 || !std::isfinite(area)) continue;

    const double xmin = std::min({a.screen.x(), b.screen.x(), c.screen.x()});
    const double xmax = std::max({a.screen.x(), b.screen.x(), c.screen.x()});
    const double ymin = std::min({a.screen.y(), b.screen.y(), c.screen.y()});
    const double ymax = std::max({a.screen.y(), b.screen.y(), c.screen.y()});
    const int u0 = std::max(0, static_cast<int>(std::floor(xmin - 0.5)));
    const int u1 = std::min(W - 1, static_cast<int>(std::ceil(xmax - 0.5)));
    const int v0 = std::max(0, static_cast<int>(std::floor(ymin - 0.5)));
    const int v1 = std::min(H - 1, static_cast<int>(std::ceil(ymax - 0.5)));

    for (int v = v0; v <= v1; ++v) {
      for (int u = u0; u <= u1; ++u) {
        const Eigen::Vector2d p(u + 0.5, v + 0.5);
        const double l0 = edge(b.screen, c.screen, p) / area;
        const double l1 = edge(c.screen, a.screen, p) / area;
        const double l2 = edge(a.screen, b.screen, p) / area;
        if (l0 < 0.0 || l1 < 0.0 || l2 < 0.0) continue;
        // perspective-correct weights; identical to l* when w == 1
        const double q0 = l0 / a.w, q1 = l1 / b.w, q2 = l2 / c.w;
        const double qs = q0 + q1 + q2;
        const double b0 = q0 / qs, b1 = q1 / qs, b2 = q2 / qs;
        const double z = b0 * a.depth + b1 * b.depth + b2 * c.depth;
        if (!(z < out.depth(v, u))) continue;
        out.depth(v, u) = z;
        out.face_id(v, u) = static_cast<int>(f);
        out.bary[0](v, u) = b0;
        out.bary[1](v, u) = b1;
        out.bary[2](v, u) = b2;
      }
    }
  }

  std::vector<float> shade(static_cast<std::size_t>(mesh.face_count()));
  const Eigen::Vector3d eye = camera.eye(), fwd = camera.forward();
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    Eigen::Vector3d to_eye = -fwd;
    if (camera.kind == ProjectionKind::perspective) {
      const Eigen::Vector3d centroid =
          (mesh.vertices().row(mesh.faces()(f, 0)) + mesh.vertices().row(mesh.faces()(f, 1)) +
           mesh.vertices().row(mesh.faces()(f, 2))).transpose() / 3.0;
      to_eye = (eye - centroid).normalized();
    }
    const double lambert = std::abs(mesh.face_normal(f).dot(to_eye));
    shade[static_cast<std::size_t>(f)] =
        kAmbient + (1.0f - kAmbient) * static_cast<float>(lambert);
  }
  for (int v = 0; v < H; ++v) {
    for (int u = 0; u < W; ++u) {
      const int f = out.face_id(v, u);
      if (f == kEmptyFace) continue;
      for (int ch = 0; ch < 3; ++ch) {
        out.rgb[static_cast<std::size_t>(ch)](v, u) = kBaseColor[ch] * shade[static_cast<std::size_t>(f)];
      }
    }
  }
  return out;
}

std::optional<int> pixel_vertex(const RenderOutput& output, const LabeledMesh& mesh,
                                Pixel pixel) {
  if (pixel.u < 0 || pixel.v < 0 || pixel.u >= output.width() || pixel.v >= output.height()) {
    throw ArgumentError("pixel (" + std::to_string(pixel.u) + ", " + std::to_string(pixel.v) +
                        ") outside the image");
  }
  const int f = output.face_id(pixel.v, pixel.u);
  if (f == kEmptyFace) return std::nullopt;
  int best = -1;
  double best_w = -1.0;
  for (int k = 0; k < 3; ++k) {
    const int vid = mesh.faces()(f, k);
    const double w = output.bary[static_cast<std::size_t>(k)](pixel.v, pixel.u);
    if (w > best_w || (w == best_w && vid < best)) {
      best = vid;
      best_w = w;
    }
  }
  return best;
}

Image<int> vertex_map(const RenderOutput& output, const LabeledMesh& mesh) {
  Image<int> map(output.height(), output.width());
  for (int v = 0; v < output.height(); ++v) {
    for (int u = 0; u < output.width(); ++u) {
      map(v, u) = pixel_vertex(output, mesh, {u, v}).value_or(-1);
    }
  }
  return map;
}

MaskMap render_mask_map(const LabeledMesh& mesh, const RenderOutput& output) {
  const Labels& labels = mesh.require_labels();
  MaskMap mask;
  for (auto& ch : mask.channels) ch = Image<float>::Zero(output.height(), output.width());
  for (int v = 0; v < output.height(); ++v) {
    for (int u = 0; u < output.width(); ++u) {
      const auto vid = pixel_vertex(output, mesh, {u, v});
      if (!vid) continue;
      const int label = labels[*vid];
      if (label >= 1) mask.channels[static_cast<std::size_t>(label - 1)](v, u) = 1.0f;
    }
  }
  return mask;
}

MaskMap render_mask_map(const LabeledMesh& mesh, const Camera& camera) {
  mesh.require_labels();
  return render_mask_map(mesh, render(mesh, camera));
}

}  // namespace toothlift
