#pragma once

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "toothlift/adjacency.hpp"
#include "toothlift/mesh.hpp"

namespace toothlift {

/// Per-tooth values; nullopt marks a class without ground-truth support.
using PerClass = std::array<std::optional<double>, kNumTeeth>;
/// Symmetric-position groups: group g (0-based) holds classes g+1 and g+9.
using PerGroup = std::array<std::optional<double>, kNumTeeth / 2>;

enum class BoundaryMode {
  label_aware,  // boundary vertices must also agree on the label
  region_only,  // plain IoU of the two boundary sets
};

struct MetricsReport {
  double oa = 0.0;
  double t_miou = 0.0;
  double b_iou = 0.0;
  double dice = 0.0;
  PerClass per_class_iou{};
  PerGroup per_group_iou{};
};

double overall_accuracy(const Labels& pred, const Labels& gt);

struct ToothIou {
  double t_miou = 0.0;
  PerClass per_class{};
};
/// Mean IoU over tooth classes present in `gt`; UndefinedMetricError when gt
/// has no tooth vertex.
ToothIou tooth_miou(const Labels& pred, const Labels& gt);

/// Vertices with a differently-labelled vertex in their neighbourhood.
std::vector<bool> boundary_vertices(const Labels& labels,
                                    const std::vector<std::vector<int>>& neighborhoods);

double boundary_iou(const Labels& pred, const Labels& gt,
                    const std::vector<std::vector<int>>& neighborhoods,
                    BoundaryMode mode = BoundaryMode::label_aware);
/// Boundary IoU with k-neighbourhoods taken from `index`.
double boundary_iou(const Labels& pred, const Labels& gt, const AdjacencyIndex& index, int k = 10,
                    BoundaryMode mode = BoundaryMode::label_aware,
                    NeighborhoodKind kind = NeighborhoodKind::nearest);

/// Mean per-class Dice over tooth classes present in `gt`.
double dice(const Labels& pred, const Labels& gt);
PerClass per_class_dice(const Labels& pred, const Labels& gt);

PerGroup group_ious(const PerClass& per_class);

struct EvaluationOptions {
  int k = 10;
  BoundaryMode boundary_mode = BoundaryMode::label_aware;
  NeighborhoodKind neighborhood = NeighborhoodKind::nearest;
};

MetricsReport evaluate(const Labels& pred, const Labels& gt, const AdjacencyIndex& index,
                       const EvaluationOptions& options = {});

nlohmann::json to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);
void save_report(const std::filesystem::path& path, const MetricsReport& report);

/// Batch roll-up: header then one row per named report.
void save_report_csv(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, MetricsReport>>& rows);

}  // namespace toothlift
