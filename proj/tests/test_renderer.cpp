#include <doctest.h>

#include <Eigen/LU>

#include "oracles.hpp"
#include "toothlift/error.hpp"
#include "toothlift/image_io.hpp"
#include "toothlift/normalize.hpp"
#include "toothlift/render.hpp"
#include "toothlift/synth.hpp"

using namespace toothlift;

using oracle::pixel_camera;
using oracle::triangles;
using oracle::world;

TEST_CASE("make_view_set") {
  const auto one = make_view_set(1, 64, 64);
  REQUIRE(one.size() == 1);
  CHECK((one[0].forward() + Eigen::Vector3d::UnitZ()).norm() < 1e-12);

  const auto ten = make_view_set(10, 512, 512);
  REQUIRE(ten.size() == 10);
  for (std::size_t i = 0; i < ten.size(); ++i) {
    CHECK(ten[i].view_id == int(i));
    CHECK(ten[i].width == 512);
    CHECK(ten[i].height == 512);
    // every camera looks at the origin
    const Eigen::Vector3d to_origin = -ten[i].eye().normalized();
    CHECK((to_origin - ten[i].forward()).norm() < 1e-12);
  }
  for (std::size_t i = 1; i < ten.size(); ++i) {
    CHECK(std::asin(-ten[i].forward().z()) == doctest::Approx(30.0 * M_PI / 180.0));
  }
  const auto again = make_view_set(10, 512, 512);
  for (std::size_t i = 0; i < ten.size(); ++i) CHECK(ten[i].projection() == again[i].projection());
  CHECK_THROWS_AS(make_view_set(0, 64, 64), ArgumentError);
  CHECK_THROWS_AS(make_view_set(1, 0, 64), ArgumentError);
}

TEST_CASE("projection decomposes into extrinsics and an invertible projection") {
  for (const Camera& c : make_view_set(10, 128, 96)) {
    const Eigen::Matrix3d r = c.view.topLeftCorner<3, 3>();
    CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).norm() < 1e-12);
    CHECK(std::abs(c.clip.topLeftCorner<3, 3>().determinant()) > 0);
  }
}

TEST_CASE("full-frustum triangle covers every pixel") {
  const Camera c = pixel_camera(16, 16);
  const LabeledMesh m = triangles({{world(c, -1, -1, 1), world(c, 40, -1, 1), world(c, -1, 40, 1)}});
  const RenderOutput out = render(m, c);
  CHECK((out.face_id.array() == 0).all());
  CHECK(((out.depth.array() - 1.0).abs() < 1e-12).all());
}

TEST_CASE("empty mesh renders empty buffers") {
  const RenderOutput out = render(LabeledMesh(), make_view_set(1, 8, 8)[0]);
  CHECK((out.face_id.array() == kEmptyFace).all());
  CHECK(out.depth.array().isInf().all());
  for (const auto& b : out.bary) CHECK((b.array() == kEmptyBary).all());
}

TEST_CASE("coverage equals point-in-triangle brute force") {
  oracle::Rng rng(21);
  const int W = 64, H = 32;
  const Camera c = pixel_camera(W, H);
  for (int trial = 0; trial < 200; ++trial) {
    // vertices on a quarter-pixel lattice so that pixel centres fall exactly
    // on edges now and then
    std::array<Eigen::Vector2d, 3> s;
    for (auto& p : s) p = {oracle::uniform_int(rng, -20, 4 * W + 20) / 4.0, oracle::uniform_int(rng, -20, 4 * H + 20) / 4.0};
    const LabeledMesh m = triangles({{world(c, s[0].x(), s[0].y(), 1), world(c, s[1].x(), s[1].y(), 2),
                                      world(c, s[2].x(), s[2].y(), 3)}});
    const RenderOutput out = render(m, c);
    for (int v = 0; v < H; ++v) {
      for (int u = 0; u < W; ++u) {
        const bool expect = oracle::covers(s[0], s[1], s[2], {u + 0.5, v + 0.5});
        CHECK(out.covered({u, v}) == expect);
        if (!expect) continue;
        const double b0 = out.bary[0](v, u), b1 = out.bary[1](v, u), b2 = out.bary[2](v, u);
        CHECK(b0 >= 0);
        CHECK(b1 >= 0);
        CHECK(b2 >= 0);
        CHECK(std::abs(b0 + b1 + b2 - 1) < 1e-5);
        CHECK(out.depth(v, u) == doctest::Approx(b0 + 2 * b1 + 3 * b2));
      }
    }
  }
}

TEST_CASE("depth test keeps the nearer face") {
  const Camera c = pixel_camera(32, 32);
  SUBCASE("parallel triangles, both submission orders") {
    const std::array<Eigen::RowVector3d, 3> back = {world(c, 2, 2, 5), world(c, 30, 2, 5), world(c, 2, 30, 5)};
    const std::array<Eigen::RowVector3d, 3> front = {world(c, 8, 8, 1), world(c, 28, 8, 1), world(c, 8, 28, 1)};
    for (bool front_first : {false, true}) {
      const LabeledMesh m = front_first ? triangles({front, back}) : triangles({back, front});
      const int fid = front_first ? 0 : 1;
      const RenderOutput out = render(m, c);
      for (int v = 0; v < 32; ++v) {
        for (int u = 0; u < 32; ++u) {
          const Eigen::Vector2d p(u + 0.5, v + 0.5);
          if (oracle::covers({8, 8}, {28, 8}, {8, 28}, p)) {
            CHECK(out.face_id(v, u) == fid);
          } else if (oracle::covers({2, 2}, {30, 2}, {2, 30}, p)) {
            CHECK(out.face_id(v, u) == 1 - fid);
          }
        }
      }
    }
  }
  SUBCASE("interpenetrating triangles") {
    const Eigen::Vector3d a0(2, 2, 1), a1(30, 2, 1), a2(2, 30, 9);
    const Eigen::Vector3d b0(2, 2, 9), b1(30, 2, 9), b2(2, 30, 1);
    const LabeledMesh m = triangles({{world(c, a0.x(), a0.y(), a0.z()), world(c, a1.x(), a1.y(), a1.z()),
                                      world(c, a2.x(), a2.y(), a2.z())},
                                     {world(c, b0.x(), b0.y(), b0.z()), world(c, b1.x(), b1.y(), b1.z()),
                                      world(c, b2.x(), b2.y(), b2.z())}});
    const RenderOutput out = render(m, c);
    int seen[2] = {0, 0};
    for (int v = 0; v < 32; ++v) {
      for (int u = 0; u < 32; ++u) {
        if (!oracle::covers({2, 2}, {30, 2}, {2, 30}, {u + 0.5, v + 0.5})) continue;
        const double da = oracle::plane_depth(a0, a1, a2, u + 0.5, v + 0.5);
        const double db = oracle::plane_depth(b0, b1, b2, u + 0.5, v + 0.5);
        const int expect = da <= db ? 0 : 1;  // equal depth keeps the lower index
        CHECK(out.face_id(v, u) == expect);
        ++seen[expect];
      }
    }
    CHECK(seen[0] > 0);
    CHECK(seen[1] > 0);
  }
}

TEST_CASE("projected vertex lights the predicted pixel") {
  oracle::Rng rng(4);
  for (const Camera& cam : make_view_set(6, 64, 48)) {
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::Vector3d p(oracle::uniform(rng, -0.4, 0.4), oracle::uniform(rng, -0.4, 0.4),
                              oracle::uniform(rng, -0.4, 0.4));
      const Eigen::Vector4d clip = cam.projection() * Eigen::Vector4d(p.x(), p.y(), p.z(), 1.0);
      const double sx = (clip.x() / clip.w() + 1) * 0.5 * cam.width;
      const double sy = (1 - clip.y() / clip.w()) * 0.5 * cam.height;
      const int u = int(std::floor(sx)), v = int(std::floor(sy));
      // tiny triangle around p in the camera plane
      const Eigen::Matrix3d r = cam.view.topLeftCorner<3, 3>().transpose();
      const double e = 0.05;
      Vertices verts(3, 3);
      verts.row(0) = (p + r * Eigen::Vector3d(-e, -e, 0)).transpose();
      verts.row(1) = (p + r * Eigen::Vector3d(e, -e, 0)).transpose();
      verts.row(2) = (p + r * Eigen::Vector3d(0, e, 0)).transpose();
      Faces f(1, 3);
      f << 0, 1, 2;
      const RenderOutput out = render(LabeledMesh(verts, f), cam);
      CHECK(out.covered({u, v}));
    }
  }
}

TEST_CASE("pixel_vertex attribution") {
  const Camera c = pixel_camera(16, 16);
  // pixel (0, 0) centre sits on corner a
  const LabeledMesh m = triangles({{world(c, 0.5, 0.5, 1), world(c, 12.5, 0.5, 1), world(c, 0.5, 12.5, 1)}});
  const RenderOutput out = render(m, c);
  CHECK(pixel_vertex(out, m, {0, 0}) == 0);
  CHECK(pixel_vertex(out, m, {12, 0}) == 1);
  CHECK(pixel_vertex(out, m, {15, 15}) == std::nullopt);
  CHECK_THROWS_AS(pixel_vertex(out, m, {16, 0}), ArgumentError);
  CHECK_THROWS_AS(pixel_vertex(out, m, {0, -1}), ArgumentError);

  Vertices v(3, 3);
  v.row(0) = world(c, 2.5, 3.5, 1);
  v.row(1) = world(c, 5.5, 3.5, 1);
  v.row(2) = world(c, 5.5, 6.5, 1);
  Faces f(1, 3);
  f << 2, 0, 1;
  const LabeledMesh tri(v, f);
  const RenderOutput o2 = render(tri, c);
  // centroid (4.5, 4.5) -> equal weights -> lowest vertex index
  CHECK(pixel_vertex(o2, tri, {4, 4}) == 0);

  oracle::Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    Vertices w(3, 3);
    for (int k = 0; k < 3; ++k) w.row(k) = world(c, oracle::uniform(rng, 0, 16), oracle::uniform(rng, 0, 16), 1);
    const LabeledMesh t(w, f);
    const RenderOutput o = render(t, c);
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) {
        const auto pv = pixel_vertex(o, t, {x, y});
        CHECK(pv.has_value() == o.covered({x, y}));
        if (pv) CHECK((*pv >= 0 && *pv <= 2));
      }
    }
  }
}

TEST_CASE("mask maps") {
  const Camera c = pixel_camera(16, 16);
  LabeledMesh m = triangles({{world(c, 1, 1, 1), world(c, 15, 1, 1), world(c, 1, 15, 1)}});
  CHECK_THROWS_AS(render_mask_map(m, c), StateError);

  const MaskMap bg = render_mask_map(m.with_labels(Labels::Zero(3)), c);
  for (const auto& ch : bg.channels) CHECK((ch.array() == 0).all());

  const MaskMap three = render_mask_map(m.with_labels(Labels::Constant(3, 3)), c);
  const RenderOutput out = render(m, c);
  for (int ch = 0; ch < kNumTeeth; ++ch) {
    for (int v = 0; v < 16; ++v) {
      for (int u = 0; u < 16; ++u) {
        const float expect = ch == 2 && out.covered({u, v}) ? 1.0f : 0.0f;
        CHECK(three.channels[static_cast<std::size_t>(ch)](v, u) == expect);
      }
    }
  }
}

TEST_CASE("mask map agrees with the rendered coverage on the arch") {
  const LabeledMesh mesh = normalize(synth_arch()).mesh;
  const Labels& labels = mesh.require_labels();
  for (const Camera& cam : make_view_set(3, 96, 96)) {
    const RenderOutput out = render(mesh, cam);
    const MaskMap mask = render_mask_map(mesh, out);
    for (int v = 0; v < 96; ++v) {
      for (int u = 0; u < 96; ++u) {
        float sum = 0;
        for (const auto& ch : mask.channels) {
          CHECK((ch(v, u) == 0.0f || ch(v, u) == 1.0f));
          sum += ch(v, u);
        }
        CHECK(sum <= 1.0f);
        const auto pv = pixel_vertex(out, mesh, {u, v});
        const bool background = pv && labels[*pv] == 0;
        CHECK(out.covered({u, v}) == (sum > 0 || background));
      }
    }
  }
}

TEST_CASE("rendering is deterministic and PNG export has the image size") {
  const LabeledMesh mesh = normalize(synth_grid()).mesh;
  const Camera cam = make_view_set(4, 512, 512)[2];
  const RenderOutput a = render(mesh, cam), b = render(mesh, cam);
  CHECK(a.face_id == b.face_id);
  CHECK(a.depth == b.depth);
  for (int k = 0; k < 3; ++k) {
    CHECK(a.bary[static_cast<std::size_t>(k)] == b.bary[static_cast<std::size_t>(k)]);
    CHECK(a.rgb[static_cast<std::size_t>(k)] == b.rgb[static_cast<std::size_t>(k)]);
  }
  const auto dir = oracle::scratch_dir("png");
  write_png(dir / "v.png", a.rgb);
  const PngInfo info = read_png_info(dir / "v.png");
  CHECK(info.width == 512);
  CHECK(info.height == 512);
  CHECK(info.channels == 3);

  RawBuffer<int> ids{a.width(), a.height(), 1, std::vector<int>(a.face_id.data(), a.face_id.data() + a.face_id.size())};
  write_raw(dir / "ids", ids);
  const RawBuffer<int> back = read_raw<int>(dir / "ids");
  CHECK(back.width == 512);
  CHECK(back.data == ids.data);
}
