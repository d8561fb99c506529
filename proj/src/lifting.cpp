#include "toothlift/lifting.hpp"

#include <string>

#include "toothlift/error.hpp"
#include "toothlift/image_io.hpp"

namespace toothlift {

VoteTable accumulate_votes(Eigen::Index vertex_count, const std::vector<Image<int>>& vertex_maps,
                           const std::vector<ViewSegmentation>& segs) {
  if (vertex_maps.size() != segs.size()) {
    throw ArgumentError(std::to_string(vertex_maps.size()) + " views but " +
                        std::to_string(segs.size()) + " segmentations");
  }
  VoteTable table = VoteTable::Zero(vertex_count, kNumClasses);
  for (std::size_t i = 0; i < vertex_maps.size(); ++i) {
    const auto& vmap = vertex_maps[i];
    const auto& labels = segs[i].label_map;
    if (vmap.rows() != labels.rows() || vmap.cols() != labels.cols()) {
      throw ArgumentError("segmentation of view " + std::to_string(segs[i].view_id) +
                          " does not match its render size");
    }
    for (Eigen::Index p = 0; p < vmap.size(); ++p) {
      const int v = vmap.data()[p];
      if (v < 0) continue;
      const int c = labels.data()[p];
      if (c >= kNumClasses) throw LabelError("segmentation label above 16");
      ++table(v, c);
    }
  }
  return table;
}

VoteTable accumulate_votes(const LabeledMesh& mesh, const std::vector<RenderOutput>& outputs,
                           const std::vector<ViewSegmentation>& segs) {
  if (outputs.size() != segs.size()) {
    throw ArgumentError(std::to_string(outputs.size()) + " views but " +
                        std::to_string(segs.size()) + " segmentations");
  }
  std::vector<Image<int>> maps;
  maps.reserve(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (outputs[i].view_id != segs[i].view_id) {
      throw ArgumentError("view " + std::to_string(outputs[i].view_id) +
                          " paired with segmentation of view " +
                          std::to_string(segs[i].view_id));
    }
    maps.push_back(vertex_map(outputs[i], mesh));
  }
  return accumulate_votes(mesh.vertex_count(), maps, segs);
}

Labels resolve_votes(const VoteTable& table) {
  Labels out = Labels::Zero(table.rows());
  for (Eigen::Index v = 0; v < table.rows(); ++v) {
    int best = 0;
    std::uint32_t best_count = 0;
    for (int c = 1; c < kNumClasses; ++c) {
      if (table(v, c) > best_count) {
        best = c;
        best_count = table(v, c);
      }
    }
    // background only wins outright
    if (table(v, 0) > best_count) best = 0;
    out[v] = best;
  }
  return out;
}

void save_votes(const std::filesystem::path& stem, const VoteTable& table) {
  RawBuffer<std::uint32_t> buf;
  buf.width = kNumClasses;
  buf.height = static_cast<int>(table.rows());
  buf.data.assign(table.data(), table.data() + table.size());
  write_raw(stem, buf);
}

VoteTable load_votes(const std::filesystem::path& stem) {
  const auto buf = read_raw<std::uint32_t>(stem);
  if (buf.width != kNumClasses || buf.channels != 1) {
    throw FormatError(stem.string() + ": vote table must have 17 columns");
  }
  VoteTable table(buf.height, kNumClasses);
  std::copy(buf.data.begin(), buf.data.end(), table.data());
  return table;
}

}  // namespace toothlift
