#pragma once

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "toothlift/adjacency.hpp"
#include "toothlift/fdi.hpp"
#include "toothlift/metrics.hpp"
#include "toothlift/segmenter.hpp"

namespace toothlift {

/// Settings shared by every stage. Resolution order is command-line flags,
/// then a flat JSON config file, then these defaults.
struct PipelineConfig {
  int views = 10;
  int size = 512;
  /// oracle | file:<dir> | noisy:<radius>,<rate>[,<seed>]; a noisy spec
  /// without a seed takes `seed`.
  std::string segmenter = "oracle";
  double potts_scale = 1.0;
  int max_sweeps = 5;
  BoundaryMode biou_mode = BoundaryMode::label_aware;
  NeighborhoodKind neighborhood = NeighborhoodKind::nearest;
  int k = 10;
  std::optional<std::filesystem::path> fdi_table;
  std::filesystem::path out = "out";
  std::uint64_t seed = 0;
  int jobs = 1;
  Eigen::Vector3d up_axis = Eigen::Vector3d::UnitZ();

  /// Overrides fields present in a flat JSON object; FormatError on unknown
  /// keys or wrongly typed values, ArgumentError on out-of-range values.
  void apply_json(const nlohmann::json& j);
  /// Reads a config file and applies it on top of the current values.
  void apply_file(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void validate() const;

  SegmenterSpec segmenter_spec() const;
  FdiTable fdi() const;
  EvaluationOptions evaluation() const;
};

std::string to_string(BoundaryMode mode);
BoundaryMode parse_boundary_mode(const std::string& text);

}  // namespace toothlift
