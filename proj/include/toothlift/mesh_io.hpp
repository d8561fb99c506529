#pragma once

#include <filesystem>
#include <optional>

#include "toothlift/fdi.hpp"
#include "toothlift/mesh.hpp"

namespace toothlift {

/// Reads an OBJ, PLY (ASCII or binary) or STL mesh, chosen by extension.
/// When `labels_path` is given the per-vertex FDI codes it holds are mapped
/// through `table` and attached to the mesh.
LabeledMesh load_mesh(const std::filesystem::path& path,
                      const std::optional<std::filesystem::path>& labels_path =
                          std::nullopt,
                      const FdiTable& table = FdiTable());

struct LabelFile {
  Labels labels;  // class indices
  Jaw jaw = Jaw::upper;
};

/// Label JSON: {"labels": [fdi, ...], "jaw": "upper"|"lower"}; "jaw" is
/// optional and any other key (e.g. "instances") is ignored.
LabelFile load_labels(const std::filesystem::path& path,
                      const FdiTable& table = FdiTable());
void save_labels(const std::filesystem::path& path, const Labels& labels,
                 Jaw jaw, const FdiTable& table = FdiTable());

/// Binary little-endian PLY with double-precision coordinates.
void save_ply(const std::filesystem::path& path, const LabeledMesh& mesh);
void save_obj(const std::filesystem::path& path, const LabeledMesh& mesh);

}  // namespace toothlift
