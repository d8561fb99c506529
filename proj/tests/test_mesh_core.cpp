#include <doctest.h>

#include <Eigen/LU>
#include <nlohmann/json.hpp>

#include <fstream>
#include <set>

#include "oracles.hpp"
#include "toothlift/adjacency.hpp"
#include "toothlift/error.hpp"
#include "toothlift/fdi.hpp"
#include "toothlift/mesh_io.hpp"
#include "toothlift/normalize.hpp"
#include "toothlift/synth.hpp"

using namespace toothlift;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

const char* kTetraObj =
    "# tetrahedron\n"
    "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\n"
    "f 1 3 2\nf 1 2 4\nf 1 4 3\nf 2 3 4\n";

const char* kCubeObj =
    "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1\n"
    "f 1 2 3 4\nf 5 8 7 6\nf 1 5 6 2\nf 2 6 7 3\nf 3 7 8 4\nf 4 8 5 1\n";

}  // namespace

TEST_CASE("LabeledMesh validates faces and labels") {
  Vertices v(3, 3);
  v << 0, 0, 0, 1, 0, 0, 0, 1, 0;
  Faces f(1, 3);
  f << 0, 1, 2;
  CHECK_NOTHROW(LabeledMesh(v, f));
  Faces bad(1, 3);
  bad << 0, 1, 3;
  CHECK_THROWS_AS(LabeledMesh(v, bad), Error);
  bad << 0, 1, 1;
  CHECK_THROWS_AS(LabeledMesh(v, bad), Error);
  CHECK_THROWS_AS(LabeledMesh(v, f, Labels::Zero(2)), AlignmentError);
  CHECK_THROWS_AS(LabeledMesh(v, f, Labels::Constant(3, 17)), LabelError);
  CHECK_THROWS_AS(LabeledMesh(v, f).require_labels(), StateError);
}

TEST_CASE("load_mesh reads OBJ with and without labels") {
  const fs::path dir = oracle::scratch_dir("load");
  write_text(dir / "tetra.obj", kTetraObj);
  const LabeledMesh tetra = load_mesh(dir / "tetra.obj");
  CHECK(tetra.vertex_count() == 4);
  CHECK(tetra.face_count() == 4);
  CHECK_FALSE(tetra.has_labels());

  write_text(dir / "cube.obj", kCubeObj);
  write_text(dir / "cube.json", R"({"labels": [0,0,0,0,0,0,0,0], "instances": [1,2]})");
  const LabeledMesh cube = load_mesh(dir / "cube.obj", dir / "cube.json");
  CHECK(cube.vertex_count() == 8);
  CHECK(cube.face_count() == 12);
  CHECK((cube.require_labels().array() == 0).all());

  write_text(dir / "short.json", R"({"labels": [0,0,0]})");
  CHECK_THROWS_AS(load_mesh(dir / "tetra.obj", dir / "short.json"), AlignmentError);
  write_text(dir / "broken.obj", "v 0 0\nf 1 2 3\n");
  CHECK_THROWS_AS(load_mesh(dir / "broken.obj"), FormatError);
  CHECK_THROWS_AS(load_mesh(dir / "missing.obj"), Error);
  write_text(dir / "mesh.xyz", "");
  CHECK_THROWS_AS(load_mesh(dir / "mesh.xyz"), Error);
}

TEST_CASE("PLY save/load round-trips vertices bit-exactly") {
  oracle::Rng rng(7);
  const fs::path dir = oracle::scratch_dir("ply");
  for (int trial = 0; trial < 5; ++trial) {
    LabeledMesh m = oracle::grid_mesh(oracle::uniform_int(rng, 2, 9), oracle::uniform_int(rng, 2, 9), rng, 0.4);
    Vertices v = m.vertices();
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] *= oracle::uniform(rng, 1e-3, 1e3);
    m = m.with_vertices(v);
    save_ply(dir / "m.ply", m);
    const LabeledMesh back = load_mesh(dir / "m.ply");
    CHECK(back.vertices() == m.vertices());
    CHECK(back.faces() == m.faces());
  }
}

TEST_CASE("OBJ save/load preserves topology") {
  oracle::Rng rng(3);
  const LabeledMesh m = oracle::grid_mesh(4, 5, rng);
  const fs::path dir = oracle::scratch_dir("obj");
  save_obj(dir / "m.obj", m);
  const LabeledMesh back = load_mesh(dir / "m.obj");
  CHECK(back.faces() == m.faces());
  CHECK((back.vertices() - m.vertices()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("label files round-trip through FDI codes") {
  const fs::path dir = oracle::scratch_dir("labels");
  Labels l(17);
  for (int i = 0; i < 17; ++i) l[i] = i;
  for (Jaw jaw : {Jaw::upper, Jaw::lower}) {
    save_labels(dir / "l.json", l, jaw);
    const LabelFile back = load_labels(dir / "l.json");
    CHECK(back.labels == l);
    CHECK(back.jaw == jaw);
  }
  write_text(dir / "bad.json", R"({"labels": [0, 99]})");
  CHECK_THROWS_AS(load_labels(dir / "bad.json"), LabelError);
}

TEST_CASE("map_fdi examples") {
  CHECK(map_fdi(0) == 0);
  CHECK(map_fdi(11) == 8);
  CHECK(map_fdi(18) == 1);
  CHECK(map_fdi(21) == 9);
  CHECK(map_fdi(28) == 16);
  CHECK(map_fdi(48) == 1);
  CHECK(map_fdi(31) == 9);
  CHECK_THROWS_AS(map_fdi(99), LabelError);
  CHECK_THROWS_AS(map_fdi(19), LabelError);
  CHECK_THROWS_AS(map_fdi(-1), LabelError);
}

TEST_CASE("map_fdi is a bijection onto 1..16 within each arch") {
  const FdiTable table;
  for (const auto& quads : {std::array<int, 2>{1, 2}, std::array<int, 2>{4, 3}}) {
    std::set<int> classes;
    for (int q : quads) {
      for (int t = 1; t <= 8; ++t) {
        const int cls = map_fdi(10 * q + t);
        CHECK(cls >= 1);
        CHECK(cls <= 16);
        classes.insert(cls);
        CHECK(table.to_fdi(cls, quads[0] == 1 ? Jaw::upper : Jaw::lower) == 10 * q + t);
      }
    }
    CHECK(classes.size() == 16);
  }
  int valid = 0;
  for (int code = 0; code < 100; ++code) {
    try {
      map_fdi(code);
      ++valid;
    } catch (const LabelError&) {
    }
  }
  CHECK(valid == 33);
}

TEST_CASE("custom FDI tables must be bijective per arch") {
  nlohmann::json j = FdiTable().to_json();
  CHECK(FdiTable::from_json(j).to_class(11) == 8);
  std::swap(j["11"], j["12"]);
  CHECK(FdiTable::from_json(j).to_class(11) == 7);
  j["11"] = j["13"];
  CHECK_THROWS_AS(FdiTable::from_json(j), Error);
  nlohmann::json missing = FdiTable().to_json();
  missing.erase("38");
  CHECK_THROWS_AS(FdiTable::from_json(missing), Error);
}

TEST_CASE("normalize: centroid, up axis, diagonal") {
  Vertices v(8, 3);
  int i = 0;
  for (int x : {0, 1}) {
    for (int y : {0, 1}) {
      for (int z : {0, 1}) v.row(i++) << 4.5 + x, 4.5 + y, 4.5 + z;
    }
  }
  Faces f(2, 3);
  f << 0, 1, 2, 4, 5, 6;
  const NormalizedMesh n = normalize(LabeledMesh(v, f));
  CHECK(n.mesh.vertices().colwise().mean().norm() < 1e-12);
  CHECK(bbox_diagonal(n.mesh.vertices()) == doctest::Approx(1.0).epsilon(1e-12));

  // +Y maps to +Z
  Vertices w(3, 3);
  w << 0, 0, 0, 0, 5, 0, 1, 0, 0;
  Faces g(1, 3);
  g << 0, 1, 2;
  const NormalizedMesh m = normalize(LabeledMesh(w, g), Eigen::Vector3d::UnitY());
  const Eigen::Vector3d dir = (m.mesh.vertices().row(1) - m.mesh.vertices().row(0)).transpose().normalized();
  CHECK((dir - Eigen::Vector3d::UnitZ()).norm() < 1e-12);

  CHECK_THROWS_AS(normalize(LabeledMesh(w, g), Eigen::Vector3d::Zero()), ArgumentError);
  CHECK_THROWS_AS(normalize(LabeledMesh()), ArgumentError);
}

TEST_CASE("normalize: transform round-trip, orthonormal rotation, idempotence") {
  oracle::Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    LabeledMesh mesh = oracle::grid_mesh(5, 6, rng, 0.3);
    Vertices v = mesh.vertices() * oracle::uniform(rng, 0.1, 10.0);
    v.rowwise() += Eigen::RowVector3d(oracle::uniform(rng, -50, 50), oracle::uniform(rng, -50, 50), 3.0);
    mesh = mesh.with_vertices(v);
    const Eigen::Vector3d up(oracle::uniform(rng, -1, 1), oracle::uniform(rng, -1, 1), oracle::uniform(rng, -1, 1));
    const NormalizedMesh n = normalize(mesh, up);
    const NormalizeTransform& t = n.transform;
    CHECK((t.rotation.transpose() * t.rotation - Eigen::Matrix3d::Identity()).norm() < 1e-6);
    CHECK(t.rotation.determinant() == doctest::Approx(1.0));
    CHECK(t.scale > 0);
    CHECK(t.apply(mesh.vertices()) == n.mesh.vertices());
    CHECK((t.apply_inverse(n.mesh.vertices()) - mesh.vertices()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(((t.rotation * up.normalized()) - Eigen::Vector3d::UnitZ()).norm() < 1e-12);
    CHECK(n.mesh.vertices().colwise().mean().norm() < 1e-6);

    const NormalizedMesh again = normalize(n.mesh);
    CHECK((again.transform.rotation - Eigen::Matrix3d::Identity()).norm() < 1e-6);
    CHECK(again.transform.translation.norm() < 1e-6);
    CHECK(again.transform.scale == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("adjacency is symmetric and matches the faces") {
  oracle::Rng rng(5);
  const LabeledMesh mesh = oracle::grid_mesh(6, 7, rng);
  const AdjacencyIndex index(mesh);
  std::set<std::pair<int, int>> expected;
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    for (int e = 0; e < 3; ++e) {
      const int a = mesh.faces()(f, e), b = mesh.faces()(f, (e + 1) % 3);
      expected.insert({std::min(a, b), std::max(a, b)});
    }
  }
  CHECK(index.edges().size() == expected.size());
  for (const Edge& e : index.edges()) CHECK(expected.count({e.u, e.v}) == 1);
  for (int v = 0; v < index.vertex_count(); ++v) {
    for (int u : index.neighbors(v)) {
      const auto nu = index.neighbors(u);
      CHECK(std::find(nu.begin(), nu.end(), v) != nu.end());
    }
  }
}

TEST_CASE("k_neighborhood examples") {
  Vertices v(3, 3);
  v << 0, 0, 0, 1, 0, 0, 2, 0, 0;
  Faces f(1, 3);
  f << 0, 1, 2;
  const AdjacencyIndex line(LabeledMesh(v, f));
  auto n = k_neighborhood(line, 1, 2);
  std::sort(n.begin(), n.end());
  CHECK(n == std::vector<int>{0, 2});
  CHECK(k_neighborhood(line, 0, 1) == std::vector<int>{1});
  CHECK_THROWS_AS(k_neighborhood(line, 0, 3), ArgumentError);
  CHECK_THROWS_AS(k_neighborhood(line, 0, 0), ArgumentError);
  CHECK(k_ring(line, 0, 1) == std::vector<int>{1, 2});
}

TEST_CASE("k_neighborhood matches an exhaustive scan") {
  oracle::Rng rng(13);
  for (double jitter : {0.0, 0.3}) {
    const LabeledMesh mesh = oracle::grid_mesh(10, 10, rng, jitter);
    const AdjacencyIndex index(mesh);
    for (int k : {1, 4, 10, 25}) {
      for (int v = 0; v < 100; ++v) {
        const auto got = k_neighborhood(index, v, k);
        CHECK(got.size() == static_cast<std::size_t>(k));
        CHECK(std::find(got.begin(), got.end(), v) == got.end());
        CHECK(got == oracle::knn_scan(mesh.vertices(), v, k));
      }
    }
  }
}

TEST_CASE("k_ring on a grid matches breadth-first distances") {
  oracle::Rng rng(2);
  const LabeledMesh mesh = oracle::grid_mesh(8, 8, rng, 0.0);
  const AdjacencyIndex index(mesh);
  const auto ring = k_ring(index, 27, 1);
  CHECK(ring.size() == 6);
  for (int u : ring) CHECK(u != 27);
  const auto ring2 = k_ring(index, 27, 2);
  CHECK(std::includes(ring2.begin(), ring2.end(), ring.begin(), ring.end()));
}

TEST_CASE("synthetic arch has 14 edge-connected teeth and is deterministic") {
  const LabeledMesh a = synth_arch();
  const LabeledMesh b = synth_arch();
  CHECK(a.vertices() == b.vertices());
  CHECK(a.faces() == b.faces());
  CHECK(a.require_labels() == b.require_labels());
  CHECK(a.vertex_count() == 20000);
  const Labels& l = a.require_labels();
  std::set<int> present(l.data(), l.data() + l.size());
  CHECK(present.size() == 15);
  CHECK(*present.rbegin() == 14);
  for (int c = 0; c <= 14; ++c) CHECK(oracle::components(a, l, c) == 1);

  ArchParams p;
  p.seed = 1;
  CHECK(synth_arch(p).vertices() != a.vertices());
  p.teeth = 40;
  CHECK_THROWS_AS(synth_arch(p), ArgumentError);
}

TEST_CASE("synthetic grid is deterministic and tiles its labels") {
  GridParams p;
  const LabeledMesh g = synth_grid(p);
  CHECK(g.vertex_count() == p.n * p.n);
  CHECK(g.require_labels() == synth_grid(p).require_labels());
  const Labels& l = g.require_labels();
  for (int y = 0; y < p.n; ++y) {
    for (int x = 0; x < p.n; ++x) CHECK(l[y * p.n + x] == l[(y / p.tile) * p.tile * p.n + (x / p.tile) * p.tile]);
  }
}
