#include "toothlift/mesh_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "toothlift/error.hpp"

namespace toothlift {
namespace fs = std::filesystem;
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct MeshBuffers {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<Eigen::Vector3i> faces;

  LabeledMesh build(const fs::path& path) const {
    Vertices v(static_cast<Eigen::Index>(vertices.size()), 3);
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      v.row(static_cast<Eigen::Index>(i)) = vertices[i].transpose();
    }
    Faces f(static_cast<Eigen::Index>(faces.size()), 3);
    for (std::size_t i = 0; i < faces.size(); ++i) {
      f.row(static_cast<Eigen::Index>(i)) = faces[i].transpose();
    }
    try {
      return LabeledMesh(std::move(v), std::move(f));
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
  }
};

// ---------------------------------------------------------------- OBJ

int obj_index(const std::string& token, std::size_t vertex_count,
              const fs::path& path) {
  const auto slash = token.find('/');
  const std::string head = token.substr(0, slash);
  long idx = 0;
  try {
    std::size_t used = 0;
    idx = std::stol(head, &used);
    if (used != head.size()) throw std::invalid_argument(head);
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": bad face index '" + token + "'");
  }
  if (idx < 0) idx += static_cast<long>(vertex_count) + 1;
  if (idx < 1 || idx > static_cast<long>(vertex_count)) {
    throw FormatError(path.string() + ": face index " + head + " out of range");
  }
  return static_cast<int>(idx - 1);
}

LabeledMesh read_obj(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  MeshBuffers buf;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      Eigen::Vector3d p;
      if (!(ss >> p.x() >> p.y() >> p.z())) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) +
                          ": malformed vertex");
      }
      buf.vertices.push_back(p);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string tok;
      while (ss >> tok) poly.push_back(obj_index(tok, buf.vertices.size(), path));
      if (poly.size() < 3) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) +
                          ": face with fewer than 3 vertices");
      }
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
        buf.faces.emplace_back(poly[0], poly[k], poly[k + 1]);
      }
    }
  }
  return buf.build(path);
}

// ---------------------------------------------------------------- PLY

enum class PlyFormat { ascii, binary_le, binary_be };

struct PlyProperty {
  std::string name;
  std::string type;
  bool is_list = false;
  std::string count_type;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

std::size_t ply_type_size(const std::string& t) {
  static const std::map<std::string, std::size_t> sizes = {
      {"char", 1},   {"int8", 1},    {"uchar", 1},  {"uint8", 1},
      {"short", 2},  {"int16", 2},   {"ushort", 2}, {"uint16", 2},
      {"int", 4},    {"int32", 4},   {"uint", 4},   {"uint32", 4},
      {"float", 4},  {"float32", 4}, {"double", 8}, {"float64", 8}};
  const auto it = sizes.find(t);
  if (it == sizes.end()) throw FormatError("unknown PLY type '" + t + "'");
  return it->second;
}

class PlyCursor {
 public:
  PlyCursor(const std::vector<char>& data, std::size_t pos, PlyFormat fmt,
            const fs::path& path)
      : data_(data), pos_(pos), fmt_(fmt), path_(path) {
    if (fmt_ == PlyFormat::ascii) {
      text_.str(std::string(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
                            data_.end()));
    }
  }

  double read(const std::string& type) {
    if (fmt_ == PlyFormat::ascii) {
      double v;
      if (!(text_ >> v)) throw FormatError(path_.string() + ": truncated PLY body");
      return v;
    }
    const std::size_t n = ply_type_size(type);
    if (pos_ + n > data_.size()) {
      throw FormatError(path_.string() + ": truncated PLY body");
    }
    std::array<char, 8> raw{};
    std::memcpy(raw.data(), data_.data() + pos_, n);
    pos_ += n;
    const bool swap = (fmt_ == PlyFormat::binary_be) ==
                      (std::endian::native == std::endian::little);
    if (swap) std::reverse(raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(n));
    return decode(type, raw.data());
  }

 private:
  template <typename T>
  static double as(const char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return static_cast<double>(v);
  }

  static double decode(const std::string& t, const char* p) {
    if (t == "char" || t == "int8") return as<std::int8_t>(p);
    if (t == "uchar" || t == "uint8") return as<std::uint8_t>(p);
    if (t == "short" || t == "int16") return as<std::int16_t>(p);
    if (t == "ushort" || t == "uint16") return as<std::uint16_t>(p);
    if (t == "int" || t == "int32") return as<std::int32_t>(p);
    if (t == "uint" || t == "uint32") return as<std::uint32_t>(p);
    if (t == "float" || t == "float32") return as<float>(p);
    return as<double>(p);
  }

  const std::vector<char>& data_;
  std::size_t pos_;
  PlyFormat fmt_;
  const fs::path& path_;
  std::istringstream text_;
};

LabeledMesh read_ply(const fs::path& path) {
  const auto data = read_bytes(path);
  const std::string marker = "end_header";
  const auto it = std::search(data.begin(), data.end(), marker.begin(), marker.end());
  if (data.size() < 3 || std::string(data.begin(), data.begin() + 3) != "ply" ||
      it == data.end()) {
    throw FormatError(path.string() + ": not a PLY file");
  }
  auto body = static_cast<std::size_t>(it - data.begin()) + marker.size();
  if (body < data.size() && data[body] == '\r') ++body;
  if (body < data.size() && data[body] == '\n') ++body;

  std::istringstream header(std::string(data.begin(), it));
  std::string line;
  PlyFormat fmt = PlyFormat::ascii;
  std::vector<PlyElement> elements;
  while (std::getline(header, line)) {
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "format") {
      std::string f;
      ss >> f;
      if (f == "ascii") fmt = PlyFormat::ascii;
      else if (f == "binary_little_endian") fmt = PlyFormat::binary_le;
      else if (f == "binary_big_endian") fmt = PlyFormat::binary_be;
      else throw FormatError(path.string() + ": unknown PLY format " + f);
    } else if (word == "element") {
      PlyElement e;
      ss >> e.name >> e.count;
      elements.push_back(e);
    } else if (word == "property") {
      if (elements.empty()) throw FormatError(path.string() + ": property before element");
      PlyProperty p;
      std::string type;
      ss >> type;
      if (type == "list") {
        p.is_list = true;
        ss >> p.count_type >> p.type >> p.name;
      } else {
        p.type = type;
        ss >> p.name;
      }
      ply_type_size(p.type);
      elements.back().properties.push_back(p);
    }
  }

  MeshBuffers buf;
  PlyCursor cur(data, body, fmt, path);
  for (const auto& e : elements) {
    for (std::size_t r = 0; r < e.count; ++r) {
      Eigen::Vector3d p = Eigen::Vector3d::Zero();
      for (const auto& prop : e.properties) {
        if (prop.is_list) {
          const auto n = static_cast<std::size_t>(cur.read(prop.count_type));
          std::vector<int> idx(n);
          for (auto& v : idx) v = static_cast<int>(cur.read(prop.type));
          if (e.name == "face" &&
              (prop.name == "vertex_indices" || prop.name == "vertex_index")) {
            if (n < 3) throw FormatError(path.string() + ": face with < 3 vertices");
            for (std::size_t k = 1; k + 1 < n; ++k) {
              buf.faces.emplace_back(idx[0], idx[k], idx[k + 1]);
            }
          }
        } else {
          const double v = cur.read(prop.type);
          if (e.name == "vertex") {
            if (prop.name == "x") p.x() = v;
            else if (prop.name == "y") p.y() = v;
            else if (prop.name == "z") p.z() = v;
          }
        }
      }
      if (e.name == "vertex") buf.vertices.push_back(p);
    }
  }
  return buf.build(path);
}

// ---------------------------------------------------------------- STL

struct Vec3Less {
  bool operator()(const Eigen::Vector3d& a, const Eigen::Vector3d& b) const {
    return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
  }
};

class StlWelder {
 public:
  int add(const Eigen::Vector3d& p) {
    const auto [it, inserted] = index_.try_emplace(p, static_cast<int>(buf.vertices.size()));
    if (inserted) buf.vertices.push_back(p);
    return it->second;
  }
  void facet(const std::array<Eigen::Vector3d, 3>& corners) {
    const int a = add(corners[0]), b = add(corners[1]), c = add(corners[2]);
    // welding can collapse sliver facets; those carry no area
    if (a != b && b != c && a != c) buf.faces.emplace_back(a, b, c);
  }
  MeshBuffers buf;

 private:
  std::map<Eigen::Vector3d, int, Vec3Less> index_;
};

LabeledMesh read_stl(const fs::path& path) {
  const auto data = read_bytes(path);
  StlWelder weld;
  if (data.size() >= 84) {
    std::uint32_t count = 0;
    std::memcpy(&count, data.data() + 80, 4);
    if (84 + 50ull * count == data.size()) {
      for (std::uint32_t t = 0; t < count; ++t) {
        const char* rec = data.data() + 84 + 50ull * t + 12;
        std::array<Eigen::Vector3d, 3> corners;
        for (int k = 0; k < 3; ++k) {
          float xyz[3];
          std::memcpy(xyz, rec + 12 * k, 12);
          corners[k] = Eigen::Vector3d(xyz[0], xyz[1], xyz[2]);
        }
        weld.facet(corners);
      }
      return weld.buf.build(path);
    }
  }
  std::istringstream in(std::string(data.begin(), data.end()));
  std::string word;
  if (!(in >> word) || lower(word) != "solid") {
    throw FormatError(path.string() + ": not a binary or ASCII STL file");
  }
  std::array<Eigen::Vector3d, 3> corners;
  int k = 0;
  while (in >> word) {
    if (word == "vertex") {
      if (k >= 3 || !(in >> corners[k].x() >> corners[k].y() >> corners[k].z())) {
        throw FormatError(path.string() + ": malformed STL vertex");
      }
      ++k;
    } else if (word == "endloop") {
      if (k != 3) throw FormatError(path.string() + ": STL facet is not a triangle");
      weld.facet(corners);
      k = 0;
    }
  }
  return weld.buf.build(path);
}

const char* jaw_name(Jaw jaw) { return jaw == Jaw::upper ? "upper" : "lower"; }

}  // namespace

LabelFile load_labels(const fs::path& path, const FdiTable& table) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("labels") || !j["labels"].is_array()) {
    throw FormatError(path.string() + ": expected an object with a 'labels' array");
  }
  LabelFile out;
  if (j.contains("jaw")) {
    const auto jaw = j["jaw"].is_string() ? lower(j["jaw"].get<std::string>()) : "";
    if (jaw == "upper") out.jaw = Jaw::upper;
    else if (jaw == "lower") out.jaw = Jaw::lower;
    else throw FormatError(path.string() + ": 'jaw' must be \"upper\" or \"lower\"");
  }
  const auto& arr = j["labels"];
  out.labels.resize(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number_integer()) {
      throw FormatError(path.string() + ": label " + std::to_string(i) +
                        " is not an integer");
    }
    out.labels[static_cast<Eigen::Index>(i)] = table.to_class(arr[i].get<int>());
  }
  return out;
}

void save_labels(const fs::path& path, const Labels& labels, Jaw jaw,
                 const FdiTable& table) {
  std::vector<int> codes(static_cast<std::size_t>(labels.size()));
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    codes[static_cast<std::size_t>(i)] = table.to_fdi(labels[i], jaw);
  }
  nlohmann::json j;
  j["jaw"] = jaw_name(jaw);
  j["labels"] = codes;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump() << '\n';
}

LabeledMesh load_mesh(const fs::path& path,
                      const std::optional<fs::path>& labels_path,
                      const FdiTable& table) {
  if (!fs::exists(path)) throw IoError("no such file: " + path.string());
  const auto ext = lower(path.extension().string());
  LabeledMesh mesh;
  if (ext == ".obj") mesh = read_obj(path);
  else if (ext == ".ply") mesh = read_ply(path);
  else if (ext == ".stl") mesh = read_stl(path);
  else throw FormatError(path.string() + ": unsupported mesh format '" + ext + "'");

  if (!labels_path) return mesh;
  auto file = load_labels(*labels_path, table);
  if (file.labels.size() != mesh.vertex_count()) {
    throw AlignmentError(labels_path->string() + ": " +
                         std::to_string(file.labels.size()) + " labels for " +
                         std::to_string(mesh.vertex_count()) + " vertices");
  }
  return LabeledMesh(mesh.vertices(), mesh.faces(), std::move(file.labels), file.jaw);
}

void save_ply(const fs::path& path, const LabeledMesh& mesh) {
  static_assert(std::endian::native == std::endian::little,
                "PLY writer assumes a little-endian host");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << mesh.vertex_count() << "\n"
      << "property double x\nproperty double y\nproperty double z\n"
      << "element face " << mesh.face_count() << "\n"
      << "property list uchar int vertex_indices\nend_header\n";
  for (Eigen::Index i = 0; i < mesh.vertex_count(); ++i) {
    const Eigen::RowVector3d p = mesh.vertices().row(i);
    out.write(reinterpret_cast<const char*>(p.data()), 3 * sizeof(double));
  }
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    const std::uint8_t n = 3;
    out.write(reinterpret_cast<const char*>(&n), 1);
    const std::int32_t idx[3] = {mesh.faces()(f, 0), mesh.faces()(f, 1), mesh.faces()(f, 2)};
    out.write(reinterpret_cast<const char*>(idx), sizeof(idx));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void save_obj(const fs::path& path, const LabeledMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  for (Eigen::Index i = 0; i < mesh.vertex_count(); ++i) {
    const auto p = mesh.vertices().row(i);
    out << "v " << p(0) << ' ' << p(1) << ' ' << p(2) << '\n';
  }
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    const auto t = mesh.faces().row(f);
    out << "f " << t(0) + 1 << ' ' << t(1) + 1 << ' ' << t(2) + 1 << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace toothlift
