#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <vector>

#include "toothlift/mesh.hpp"
#include "toothlift/render.hpp"
#include "toothlift/segmenter.hpp"

namespace toothlift {

/// Vertex x class vote counts.
using VoteTable = Eigen::Matrix<std::uint32_t, Eigen::Dynamic, kNumClasses, Eigen::RowMajor>;

/// Adds one vote per covered pixel of every view: the pixel's segmentation
/// label goes to the vertex pixel_vertex attributes it to. Views must be
/// aligned by position and view_id with matching sizes, else ArgumentError.
VoteTable accumulate_votes(const LabeledMesh& mesh, const std::vector<RenderOutput>& outputs,
                           const std::vector<ViewSegmentation>& segs);

/// Same accumulation from precomputed per-view vertex maps (-1 = empty).
VoteTable accumulate_votes(Eigen::Index vertex_count, const std::vector<Image<int>>& vertex_maps,
                           const std::vector<ViewSegmentation>& segs);

/// Row-wise majority. Unvoted vertices get 0; ties prefer a tooth class
/// over background, then the lowest class index.
Labels resolve_votes(const VoteTable& table);

void save_votes(const std::filesystem::path& stem, const VoteTable& table);
VoteTable load_votes(const std::filesystem::path& stem);

}  // namespace toothlift
